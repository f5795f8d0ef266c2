use std::time::Instant;

use hotcs_core::datagen::{derive_seed, gen_channel_trace};
use serde_json::json;

use super::*;
use crate::config::{SignalSource, SweepConfig};

/// Trial-averaged results of one (ratio, SNR) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub ratio: f64,
    pub snr_db: f64,
    pub nmse_prior: f64,
    pub nmse_hot: f64,
    pub corr_prior: f64,
    pub corr_hot: f64,
    pub unconverged_prior: usize,
    pub unconverged_hot: usize,
}

impl SweepCell {
    pub fn success_prior(&self, threshold: f64) -> bool {
        self.nmse_prior <= threshold
    }

    pub fn success_hot(&self, threshold: f64) -> bool {
        self.nmse_hot <= threshold
    }
}

/// Success cells of each arm and their ratio HOT/prior (`None` when the
/// prior arm never succeeds).
pub fn area_ratio(cells: &[SweepCell], threshold: f64) -> (usize, usize, Option<f64>) {
    let p = cells.iter().filter(|c| c.success_prior(threshold)).count();
    let h = cells.iter().filter(|c| c.success_hot(threshold)).count();
    (p, h, (p > 0).then(|| h as f64 / p as f64))
}

struct Trial {
    nmse: (f64, f64),
    corr: (f64, f64),
    unconverged: (usize, usize),
}

fn run_trial(c: &SweepConfig, seed: u64, cell: usize, trial: usize, ratio: f64, snr: f64) -> Result<Trial> {
    let meas_seed = derive_seed(seed, &[cell as u64, trial as u64]);
    match &c.source {
        SignalSource::SyntheticChannel(p) => {
            let trace = gen_channel_trace(p, derive_seed(seed, &[STREAM_SIGNAL, trial as u64]))?;
            let prior = prior_for(&c.prior, p.n)?;
            let s = sequential_estimation(&trace, ratio, Some(snr), &prior, &c.solver, meas_seed)?;
            Ok(Trial {
                nmse: (s.tnmse_prior, s.tnmse_hot),
                corr: (s.tcorr_prior, s.tcorr_hot),
                unconverged: (s.unconverged_prior, s.unconverged_hot),
            })
        }
        src => {
            let x = vector_source(src, seed, trial)?;
            let prior = prior_for(&c.prior, x.len())?;
            let complex = !(c.prior.is_real() && x.max_imag_abs() == 0.0);
            let m = measurements_for(ratio, x.len());
            let meas = measure(
                &x,
                m,
                Some(snr),
                complex,
                c.unitary,
                derive_seed(meas_seed, &[STREAM_PHI]),
                derive_seed(meas_seed, &[STREAM_NOISE]),
            )?;
            let g = weak_guides_strong(&x, &meas, &prior, &c.weak, &c.solver, &[hyper_of(&c.solver)])?;
            Ok(Trial {
                nmse: (g.nmse_prior[0], g.nmse_hot[0]),
                corr: (g.corr_prior[0], g.corr_hot[0]),
                unconverged: (0, 0),
            })
        }
    }
}

fn hyper_of(s: &hotcs_core::solvers::SolverConfig) -> f64 {
    use hotcs_core::solvers::SolverConfig as S;
    match *s {
        S::Omp { max_atoms, .. } => max_atoms as f64,
        S::Lasso { lambda_scale, .. } => lambda_scale,
        S::Bp { epsilon_scale, .. } => epsilon_scale,
    }
}

pub(super) fn run(c: &SweepConfig, seed: u64) -> Result<PipelineReport> {
    let grid: Vec<(f64, f64)> = c.ratios.iter().flat_map(|&r| c.snrs_db.iter().map(move |&s| (r, s))).collect();
    let start = Instant::now();
    let trials = par_map(grid.len() * c.trials, |k| {
        let (cell, trial) = (k / c.trials, k % c.trials);
        let (ratio, snr) = grid[cell];
        run_trial(c, seed, cell, trial, ratio, snr)
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    let cells: Vec<SweepCell> = grid
        .iter()
        .enumerate()
        .map(|(cell, &(ratio, snr_db))| {
            let ts = &trials[cell * c.trials..(cell + 1) * c.trials];
            let avg = |f: fn(&Trial) -> f64| mean(&ts.iter().map(f).collect::<Vec<_>>());
            SweepCell {
                ratio,
                snr_db,
                nmse_prior: avg(|t| t.nmse.0),
                nmse_hot: avg(|t| t.nmse.1),
                corr_prior: avg(|t| t.corr.0),
                corr_hot: avg(|t| t.corr.1),
                unconverged_prior: ts.iter().map(|t| t.unconverged.0).sum(),
                unconverged_hot: ts.iter().map(|t| t.unconverged.1).sum(),
            }
        })
        .collect();
    Ok(grid_report(&cells, c.threshold, c.trials, elapsed))
}

pub(super) fn grid_report(cells: &[SweepCell], threshold: f64, trials: usize, elapsed: f64) -> PipelineReport {
    let mut table = Table::new(&[
        "ratio",
        "snr_db",
        "nmse_prior",
        "nmse_hot",
        "corr_prior",
        "corr_hot",
        "success_prior",
        "success_hot",
        "unconverged_prior",
        "unconverged_hot",
    ]);
    for cell in cells {
        table.push(vec![
            fmt_f(cell.ratio),
            fmt_f(cell.snr_db),
            fmt_f(cell.nmse_prior),
            fmt_f(cell.nmse_hot),
            fmt_f(cell.corr_prior),
            fmt_f(cell.corr_hot),
            cell.success_prior(threshold).to_string(),
            cell.success_hot(threshold).to_string(),
            cell.unconverged_prior.to_string(),
            cell.unconverged_hot.to_string(),
        ]);
    }
    let (p, h, ratio) = area_ratio(cells, threshold);
    let summary = json!({
        "cells": cells.len(),
        "trials": trials,
        "threshold": threshold,
        "success_cells_prior": p,
        "success_cells_hot": h,
        "area_ratio": ratio,
    });
    PipelineReport { table, summary, timing: json!({ "sweep_seconds": elapsed }) }
}
