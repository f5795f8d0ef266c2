//! Experiment protocols comparing a prior domain with its HOT correction.
//!
//! Each pipeline returns a [`PipelineReport`]: a CSV table that depends only
//! on (config, seed), a JSON summary of aggregates, and a separate timing
//! block holding wall-clock measurements.

mod boost;
mod guided;
mod image;
mod sequential;
mod sweep;

use std::path::Path;
use std::time::Instant;

use hotcs_core::datagen::{self, add_noise, derive_seed, rng_from_seed, Image};
use hotcs_core::solvers::MeasurementModel;
use hotcs_core::{CVector, PriorTransform};
use rayon::prelude::*;
use serde_json::{json, Value};

pub use boost::{boost_weak_learner, BoostTrace};
pub use guided::{weak_guides_strong, GuidedTrace};
pub use image::{image_cs_cell, image_references, image_topk_compression, ImageCsCell, TopkResult};
pub use sequential::{sequential_estimation, SequentialTrace};
pub use sweep::{area_ratio, SweepCell};

use crate::config::{FileFormat, PipelineConfig, RunConfig, SignalSource};
use crate::error::{Error, Result};
use crate::io::{self, Table};

pub(crate) const STREAM_SIGNAL: u64 = 1;
pub(crate) const STREAM_PHI: u64 = 2;
pub(crate) const STREAM_NOISE: u64 = 3;

/// Measurements `y = Φx + n` of one signal.
#[derive(Clone, Debug)]
pub struct Measured {
    pub model: MeasurementModel,
    pub y: CVector,
}

/// Draws `Φ` (Gaussian, or orthonormal rows) and noise from independent
/// seeds and measures `x`.
pub fn measure(x: &CVector, m: usize, snr_db: Option<f64>, complex: bool, unitary: bool, phi_seed: u64, noise_seed: u64) -> Result<Measured> {
    let n = x.len();
    if m == 0 || m > n {
        return Err(Error::config(format!("{m} measurements for dimension {n}")));
    }
    let mut rng = rng_from_seed(phi_seed);
    let phi = if unitary {
        datagen::orthonormal_rows(&mut rng, m, n, complex)?
    } else {
        datagen::gaussian_matrix(&mut rng, m, n, complex)?
    };
    measure_with(x, phi, snr_db, complex, noise_seed)
}

pub fn measure_with(x: &CVector, phi: hotcs_core::CMatrix, snr_db: Option<f64>, complex: bool, noise_seed: u64) -> Result<Measured> {
    let clean = phi.apply(x)?;
    let snr = snr_db.unwrap_or(f64::INFINITY);
    let (y, sigma2) = add_noise(&mut rng_from_seed(noise_seed), &clean, snr, complex)?;
    let model = MeasurementModel::new(phi, sigma2, snr)?;
    Ok(Measured { model, y })
}

/// `max(1, round(ratio·n))`
pub fn measurements_for(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64).round() as usize).clamp(1, n)
}

#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub table: Table,
    pub summary: Value,
    pub timing: Value,
}

impl PipelineReport {
    /// Writes `report.csv`, `summary.json` and `timing.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        io::write_csv_report(&self.table, dir.join("report.csv"))?;
        io::write_json(&self.summary, dir.join("summary.json"))?;
        io::write_json(&self.timing, dir.join("timing.json"))
    }
}

pub(crate) fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// JSON number, or null for non-finite values.
pub(crate) fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Signal of trial `trial` from `src`, from its own seed stream.
pub fn vector_source(src: &SignalSource, seed: u64, trial: usize) -> Result<CVector> {
    let s = derive_seed(seed, &[STREAM_SIGNAL, trial as u64]);
    match src {
        SignalSource::SyntheticAudio(p) => Ok(datagen::gen_audio(p, s)?),
        SignalSource::File { path, format: FileFormat::Csv } => io::load_csv_vector(path),
        _ => Err(Error::config("source does not produce a single vector")),
    }
}

pub fn image_source(src: &SignalSource, seed: u64) -> Result<Image> {
    match src {
        SignalSource::SyntheticImage(p) => Ok(datagen::gen_image(p, derive_seed(seed, &[STREAM_SIGNAL]))?),
        SignalSource::File { path, format: FileFormat::Pgm } => io::load_pgm(path),
        _ => Err(Error::config("source does not produce an image")),
    }
}

pub(crate) fn stage<T>(ctx: impl FnOnce() -> String, r: hotcs_core::Result<T>) -> Result<T> {
    r.map_err(|e| Error::stage(ctx(), e))
}

/// Runs `f` over `0..count` in parallel, returning results in index order.
pub(crate) fn par_map<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect()
}

pub(crate) fn prior_for(spec: &crate::config::PriorSpec, n: usize) -> Result<PriorTransform> {
    spec.build(n)
}

/// Executes the configured pipeline.
pub fn run(cfg: &RunConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match &cfg.pipeline {
        PipelineConfig::Boost(c) => boost::run(c, cfg.seed)?,
        PipelineConfig::WeakGuidesStrong(c) => guided::run(c, cfg.seed)?,
        PipelineConfig::SequentialEstimation(c) => sequential::run(c, cfg.seed)?,
        PipelineConfig::PhaseTransitionSweep(c) => sweep::run(c, cfg.seed)?,
        PipelineConfig::ImageTopk(c) => image::run_topk(c, cfg.seed)?,
        PipelineConfig::ImageCs(c) => image::run_cs(c, cfg.seed)?,
    };
    if let Value::Object(m) = &mut report.timing {
        m.insert("total_seconds".into(), json!(start.elapsed().as_secs_f64()));
    }
    if let Value::Object(m) = &mut report.summary {
        m.insert("pipeline".into(), json!(cfg.pipeline.name()));
        m.insert("seed".into(), json!(cfg.seed));
    }
    Ok(report)
}
