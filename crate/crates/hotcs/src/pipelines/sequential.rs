use std::time::Instant;

use hotcs_core::datagen::{derive_seed, gen_channel_trace, rng_from_seed};
use hotcs_core::metrics::{corr, nmse, temporal_metrics};
use hotcs_core::solvers::SolverConfig;
use hotcs_core::{construct_hot, CVector, Pivot, PosteriorTransform, PriorTransform};
use serde_json::json;

use super::*;
use crate::config::SequentialConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct SequentialTrace {
    pub nmse_prior: Vec<f64>,
    pub nmse_hot: Vec<f64>,
    pub corr_prior: Vec<f64>,
    pub corr_hot: Vec<f64>,
    /// `ρ(x̂_{t−1}, x_t)` of the reference actually used (NaN at fallbacks).
    pub reference_corr: Vec<f64>,
    /// Step solved in the prior domain for lack of a usable reference.
    pub fallback: Vec<bool>,
    pub unconverged_prior: usize,
    pub unconverged_hot: usize,
    pub tnmse_prior: f64,
    pub tnmse_hot: f64,
    pub tcorr_prior: f64,
    pub tcorr_hot: f64,
    pub seconds_prior: f64,
    pub seconds_hot: f64,
}

/// Tracks a time-varying signal, using each HOT-arm estimate as the
/// reference for the next step. Both arms see the same `Φ_t` and noise.
pub fn sequential_estimation(
    trace: &[CVector],
    ratio: f64,
    snr_db: Option<f64>,
    prior: &PriorTransform,
    solver: &SolverConfig,
    seed: u64,
) -> Result<SequentialTrace> {
    let first = trace.first().ok_or_else(|| Error::config("empty channel trace"))?;
    let n = first.len();
    let m = measurements_for(ratio, n);
    let base = PosteriorTransform::trivial(prior);
    let mut out = SequentialTrace {
        nmse_prior: vec![],
        nmse_hot: vec![],
        corr_prior: vec![],
        corr_hot: vec![],
        reference_corr: vec![],
        fallback: vec![],
        unconverged_prior: 0,
        unconverged_hot: 0,
        tnmse_prior: 0.0,
        tnmse_hot: 0.0,
        tcorr_prior: 0.0,
        tcorr_hot: 0.0,
        seconds_prior: 0.0,
        seconds_hot: 0.0,
    };
    let mut est_prior = Vec::with_capacity(trace.len());
    let mut est_hot = Vec::with_capacity(trace.len());
    let mut prev_hot: Option<CVector> = None;
    for (t, x) in trace.iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(seed, &[STREAM_PHI, t as u64]));
        let phi = hotcs_core::datagen::gaussian_matrix(&mut rng, m, n, true)?;
        let meas = measure_with(x, phi, snr_db, true, derive_seed(seed, &[STREAM_NOISE, t as u64]))?;
        let (y, s2) = (&meas.y, meas.model.sigma2());

        let clock = Instant::now();
        let a = stage(|| format!("step {t}: prior sensing matrix"), base.sensing_matrix(meas.model.phi()))?;
        let rp = stage(|| format!("step {t}: prior solve"), solver.solve(&a, y, s2))?;
        let xp = stage(|| format!("step {t}: prior synthesis"), base.synthesize(&rp.coeffs))?;
        out.seconds_prior += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let usable = prev_hot.as_ref().filter(|r| !r.is_zero());
        let transform = match usable {
            Some(r) => stage(|| format!("step {t}: HOT construction"), construct_hot(prior, r, Pivot::Auto))?,
            None => base.clone(),
        };
        let a = stage(|| format!("step {t}: HOT sensing matrix"), transform.sensing_matrix(meas.model.phi()))?;
        let rh = stage(|| format!("step {t}: HOT solve"), solver.solve(&a, y, s2))?;
        let xh = stage(|| format!("step {t}: HOT synthesis"), transform.synthesize(&rh.coeffs))?;
        out.seconds_hot += clock.elapsed().as_secs_f64();

        out.fallback.push(usable.is_none());
        out.reference_corr.push(match usable {
            Some(r) => hotcs_core::metrics::signal_correlation(r, x)?,
            None => f64::NAN,
        });
        out.unconverged_prior += usize::from(!rp.converged);
        out.unconverged_hot += usize::from(!rh.converged);
        out.nmse_prior.push(nmse(&xp, x)?);
        out.nmse_hot.push(nmse(&xh, x)?);
        out.corr_prior.push(corr(&xp, x)?);
        out.corr_hot.push(corr(&xh, x)?);
        est_prior.push(xp);
        prev_hot = Some(xh.clone());
        est_hot.push(xh);
    }
    (out.tnmse_prior, out.tcorr_prior) = temporal_metrics(&est_prior, trace)?;
    (out.tnmse_hot, out.tcorr_hot) = temporal_metrics(&est_hot, trace)?;
    Ok(out)
}

pub(super) fn run(c: &SequentialConfig, seed: u64) -> Result<PipelineReport> {
    let traces = par_map(c.trials, |trial| {
        let channel = gen_channel_trace(&c.channel, derive_seed(seed, &[STREAM_SIGNAL, trial as u64]))?;
        let prior = prior_for(&c.prior, c.channel.n)?;
        sequential_estimation(&channel, c.ratio, c.snr_db, &prior, &c.solver, derive_seed(seed, &[0, trial as u64]))
    })?;
    let mut table = Table::new(&[
        "trial",
        "step",
        "nmse_prior",
        "nmse_hot",
        "corr_prior",
        "corr_hot",
        "reference_corr",
        "fallback",
    ]);
    for (trial, tr) in traces.iter().enumerate() {
        for t in 0..tr.nmse_prior.len() {
            table.push(vec![
                trial.to_string(),
                t.to_string(),
                fmt_f(tr.nmse_prior[t]),
                fmt_f(tr.nmse_hot[t]),
                fmt_f(tr.corr_prior[t]),
                fmt_f(tr.corr_hot[t]),
                if tr.reference_corr[t].is_nan() { String::new() } else { fmt_f(tr.reference_corr[t]) },
                tr.fallback[t].to_string(),
            ]);
        }
    }
    let col = |f: fn(&SequentialTrace) -> f64| traces.iter().map(f).collect::<Vec<_>>();
    let summary = json!({
        "trials": c.trials,
        "measurements": measurements_for(c.ratio, c.channel.n),
        "tnmse_prior": col(|t| t.tnmse_prior).into_iter().map(num).collect::<Vec<_>>(),
        "tnmse_hot": col(|t| t.tnmse_hot).into_iter().map(num).collect::<Vec<_>>(),
        "tcorr_prior": col(|t| t.tcorr_prior).into_iter().map(num).collect::<Vec<_>>(),
        "tcorr_hot": col(|t| t.tcorr_hot).into_iter().map(num).collect::<Vec<_>>(),
        "unconverged_prior": traces.iter().map(|t| t.unconverged_prior).sum::<usize>(),
        "unconverged_hot": traces.iter().map(|t| t.unconverged_hot).sum::<usize>(),
    });
    let timing = json!({
        "seconds_prior": col(|t| t.seconds_prior),
        "seconds_hot": col(|t| t.seconds_hot),
    });
    Ok(PipelineReport { table, summary, timing })
}
