use hotcs_core::datagen::derive_seed;
use hotcs_core::metrics::{corr, nmse};
use hotcs_core::solvers::SolverConfig;
use hotcs_core::{construct_hot, CVector, Pivot, PosteriorTransform, PriorTransform};
use serde_json::json;

use super::*;
use crate::config::GuidedConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct GuidedTrace {
    pub weak_nmse: f64,
    pub hyper: Vec<f64>,
    pub nmse_prior: Vec<f64>,
    pub nmse_hot: Vec<f64>,
    pub corr_prior: Vec<f64>,
    pub corr_hot: Vec<f64>,
    pub transform: PosteriorTransform,
}

impl GuidedTrace {
    pub fn min_prior(&self) -> f64 {
        self.nmse_prior.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_hot(&self) -> f64 {
        self.nmse_hot.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Builds HOT once from the weak solver's reconstruction, then sweeps the
/// strong solver's hyperparameter in both domains.
pub fn weak_guides_strong(
    signal: &CVector,
    meas: &Measured,
    prior: &PriorTransform,
    weak: &SolverConfig,
    strong: &SolverConfig,
    hyper_sweep: &[f64],
) -> Result<GuidedTrace> {
    if hyper_sweep.is_empty() {
        return Err(Error::config("hyper_sweep: empty"));
    }
    let phi = meas.model.phi();
    let (y, s2) = (&meas.y, meas.model.sigma2());
    let base = PosteriorTransform::trivial(prior);
    let a_prior = stage(|| "prior sensing matrix".into(), base.sensing_matrix(phi))?;
    let w = stage(|| "weak solver".into(), weak.solve(&a_prior, y, s2))?;
    let x_weak = stage(|| "weak synthesis".into(), base.synthesize(&w.coeffs))?;
    let transform = if x_weak.is_zero() {
        base.clone()
    } else {
        stage(|| "HOT construction".into(), construct_hot(prior, &x_weak, Pivot::Auto))?
    };
    let mut a_hot = a_prior.clone();
    stage(|| "HOT sensing matrix".into(), transform.right_apply_factors(&mut a_hot))?;
    let mut trace = GuidedTrace {
        weak_nmse: nmse(&x_weak, signal)?,
        hyper: hyper_sweep.to_vec(),
        nmse_prior: vec![],
        nmse_hot: vec![],
        corr_prior: vec![],
        corr_hot: vec![],
        transform: transform.clone(),
    };
    for &h in hyper_sweep {
        let solver = strong.with_hyper(h);
        let rp = stage(|| format!("strong solver (prior, {h})"), solver.solve(&a_prior, y, s2))?;
        let xp = stage(|| "prior synthesis".into(), base.synthesize(&rp.coeffs))?;
        let rh = stage(|| format!("strong solver (HOT, {h})"), solver.solve(&a_hot, y, s2))?;
        let xh = stage(|| "HOT synthesis".into(), transform.synthesize(&rh.coeffs))?;
        trace.nmse_prior.push(nmse(&xp, signal)?);
        trace.nmse_hot.push(nmse(&xh, signal)?);
        trace.corr_prior.push(corr(&xp, signal)?);
        trace.corr_hot.push(corr(&xh, signal)?);
    }
    Ok(trace)
}

pub(super) fn run(c: &GuidedConfig, seed: u64) -> Result<PipelineReport> {
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
        weak_guides_strong(&x, &meas, &prior, &c.weak, &c.strong, &c.hyper_sweep)
    })?;
    let mut table = Table::new(&["trial", "hyper", "nmse_prior", "nmse_hot", "corr_prior", "corr_hot", "weak_nmse"]);
    for (trial, tr) in traces.iter().enumerate() {
        for k in 0..tr.hyper.len() {
            table.push(vec![
                trial.to_string(),
                fmt_f(tr.hyper[k]),
                fmt_f(tr.nmse_prior[k]),
                fmt_f(tr.nmse_hot[k]),
                fmt_f(tr.corr_prior[k]),
                fmt_f(tr.corr_hot[k]),
                fmt_f(tr.weak_nmse),
            ]);
        }
    }
    let wins = traces.iter().filter(|t| t.min_hot() <= t.min_prior()).count();
    let summary = json!({
        "trials": c.trials,
        "mean_min_nmse_prior": num(mean(&traces.iter().map(|t| t.min_prior()).collect::<Vec<_>>())),
        "mean_min_nmse_hot": num(mean(&traces.iter().map(|t| t.min_hot()).collect::<Vec<_>>())),
        "fraction_hot_ceiling_higher": wins as f64 / c.trials as f64,
    });
    Ok(PipelineReport { table, summary, timing: json!({}) })
}
