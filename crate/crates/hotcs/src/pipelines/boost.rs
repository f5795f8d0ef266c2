use hotcs_core::datagen::derive_seed;
use hotcs_core::metrics::{corr, nmse};
use hotcs_core::solvers::SolverConfig;
use hotcs_core::{construct_hot, CVector, Pivot, PosteriorTransform, PriorTransform};
use serde_json::json;

use super::*;
use crate::config::BoostConfig;

/// Per-round results of one boosting run. Round 0 is the plain weak solver.
#[derive(Clone, Debug, PartialEq)]
pub struct BoostTrace {
    pub nmse: Vec<f64>,
    pub corr: Vec<f64>,
    pub factors: Vec<usize>,
    pub pivots: Vec<Option<usize>>,
    /// Round reused the previous domain because the estimate was zero.
    pub fallback: Vec<bool>,
    pub estimates: Vec<CVector>,
}

/// Re-runs a weak solver in domains corrected by its own previous output.
pub fn boost_weak_learner(
    signal: &CVector,
    meas: &Measured,
    prior: &PriorTransform,
    rounds: usize,
    weak: &SolverConfig,
) -> Result<BoostTrace> {
    if rounds == 0 {
        return Err(Error::config("rounds must be ≥ 1"));
    }
    let phi = meas.model.phi();
    let mut t = PosteriorTransform::trivial(prior);
    let mut trace = BoostTrace {
        nmse: vec![],
        corr: vec![],
        factors: vec![],
        pivots: vec![],
        fallback: vec![],
        estimates: vec![],
    };
    for round in 0..rounds {
        let mut fallback = false;
        if round > 0 {
            let prev = trace.estimates.last().expect("round 0 ran");
            if prev.is_zero() {
                fallback = true;
            } else {
                t = stage(|| format!("round {round}: HOT construction"), construct_hot(prior, prev, Pivot::Auto))?;
            }
        }
        let a = stage(|| format!("round {round}: sensing matrix"), t.sensing_matrix(phi))?;
        let res = stage(|| format!("round {round}: weak solver"), weak.solve(&a, &meas.y, meas.model.sigma2()))?;
        let x = stage(|| format!("round {round}: synthesis"), t.synthesize(&res.coeffs))?;
        trace.nmse.push(nmse(&x, signal)?);
        trace.corr.push(corr(&x, signal)?);
        trace.factors.push(t.num_factors());
        trace.pivots.push(if round == 0 { None } else { t.pivots().first().copied() });
        trace.fallback.push(fallback);
        trace.estimates.push(x);
    }
    Ok(trace)
}

pub(super) fn run(c: &BoostConfig, seed: u64) -> Result<PipelineReport> {
    let traces = par_map(c.trials, |trial| {
        let x = vector_source(&c.signal, seed, trial)?;
        let prior = prior_for(&c.prior, x.len())?;
        let complex = !(c.prior.is_real() && x.max_imag_abs() == 0.0);
        let meas = measure(
            &x,
            c.measurements,
            c.snr_db,
            complex,
            false,
            derive_seed(seed, &[STREAM_PHI, trial as u64]),
            derive_seed(seed, &[STREAM_NOISE, trial as u64]),
        )?;
        boost_weak_learner(&x, &meas, &prior, c.rounds, &c.weak)
    })?;
    let mut table = Table::new(&["trial", "round", "nmse", "corr", "factors", "pivot", "fallback"]);
    for (trial, tr) in traces.iter().enumerate() {
        for r in 0..tr.nmse.len() {
            table.push(vec![
                trial.to_string(),
                r.to_string(),
                fmt_f(tr.nmse[r]),
                fmt_f(tr.corr[r]),
                tr.factors[r].to_string(),
                tr.pivots[r].map_or(String::new(), |p| p.to_string()),
                tr.fallback[r].to_string(),
            ]);
        }
    }
    let ratios: Vec<f64> = traces.iter().map(|t| t.nmse[t.nmse.len() - 1] / t.nmse[0]).collect();
    let halved = ratios.iter().filter(|&&r| r <= 0.5).count();
    let per_round: Vec<f64> = (0..c.rounds).map(|r| mean(&traces.iter().map(|t| t.nmse[r]).collect::<Vec<_>>())).collect();
    let summary = json!({
        "trials": c.trials,
        "mean_nmse_per_round": per_round.iter().map(|&v| num(v)).collect::<Vec<_>>(),
        "median_final_over_initial": num(median(&ratios)),
        "fraction_halved": halved as f64 / c.trials as f64,
    });
    Ok(PipelineReport { table, summary, timing: json!({}) })
}
