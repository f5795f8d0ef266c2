//! Run configuration (versioned JSON) and run manifests.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hotcs_core::datagen::{AudioParams, ChannelParams, ImageParams};
use hotcs_core::priors::max_haar_levels;
use hotcs_core::solvers::SolverConfig;
use hotcs_core::{PriorKind, PriorTransform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Prior transform name: `dft`, `dct`, `haar`, `haar:<levels>` or `identity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PriorSpec {
    Dft,
    Dct,
    Haar(Option<u32>),
    Identity,
}

impl FromStr for PriorSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dft" => Ok(PriorSpec::Dft),
            "dct" | "dct2" => Ok(PriorSpec::Dct),
            "haar" | "dwt" => Ok(PriorSpec::Haar(None)),
            "identity" | "id" => Ok(PriorSpec::Identity),
            other => match other.strip_prefix("haar:") {
                Some(l) => l
                    .parse::<u32>()
                    .map(|l| PriorSpec::Haar(Some(l)))
                    .map_err(|_| Error::config(format!("invalid Haar level count in prior {s:?}"))),
                None => Err(Error::config(format!("unknown prior {s:?} (expected dft, dct, haar, haar:<levels>, identity)"))),
            },
        }
    }
}

impl TryFrom<String> for PriorSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PriorSpec> for String {
    fn from(p: PriorSpec) -> String {
        p.to_string()
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Dft => f.write_str("dft"),
            PriorSpec::Dct => f.write_str("dct"),
            PriorSpec::Haar(None) => f.write_str("haar"),
            PriorSpec::Haar(Some(l)) => write!(f, "haar:{l}"),
            PriorSpec::Identity => f.write_str("identity"),
        }
    }
}

impl PriorSpec {
    pub fn build(&self, n: usize) -> Result<PriorTransform> {
        let kind = match *self {
            PriorSpec::Dft => PriorKind::Dft,
            PriorSpec::Dct => PriorKind::Dct2,
            PriorSpec::Haar(levels) => {
                let max = max_haar_levels(n);
                let levels = levels.unwrap_or(max);
                if levels == 0 || levels > max {
                    return Err(Error::config(format!("dimension {n} does not support {levels} Haar levels (max {max})")));
                }
                PriorKind::Haar { levels }
            }
            PriorSpec::Identity => PriorKind::Identity,
        };
        PriorTransform::new(kind, n).map_err(|e| Error::config(e.to_string()))
    }

    pub fn is_real(&self) -> bool {
        !matches!(self, PriorSpec::Dft)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Csv,
    Pgm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSource {
    SyntheticAudio(AudioParams),
    SyntheticChannel(ChannelParams),
    SyntheticImage(ImageParams),
    File { path: PathBuf, format: FileFormat },
}

fn default_rounds() -> usize {
    3
}
fn default_trials() -> usize {
    1
}
fn default_threshold() -> f64 {
    0.1
}
fn default_image_threshold() -> f64 {
    0.01
}
fn default_refs() -> usize {
    1
}
fn default_weak() -> SolverConfig {
    SolverConfig::Omp { max_atoms: 4, residual_tol: 0.0 }
}
fn default_bp() -> SolverConfig {
    SolverConfig::Bp { epsilon_scale: 1.0, max_iters: 5000 }
}
fn default_lasso() -> SolverConfig {
    SolverConfig::Lasso { lambda_scale: 0.01, max_iters: 5000 }
}
fn default_dft() -> PriorSpec {
    PriorSpec::Dft
}
fn default_haar() -> PriorSpec {
    PriorSpec::Haar(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostConfig {
    pub prior: PriorSpec,
    pub signal: SignalSource,
    pub measurements: usize,
    #[serde(default)]
    pub snr_db: Option<f64>,
    /// Total rounds including the plain round 0.
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_weak")]
    pub weak: SolverConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidedConfig {
    pub prior: PriorSpec,
    pub signal: SignalSource,
    pub measurements: usize,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_weak")]
    pub weak: SolverConfig,
    #[serde(default = "default_bp")]
    pub strong: SolverConfig,
    /// Values substituted into the strong solver's hyperparameter.
    pub hyper_sweep: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequentialConfig {
    #[serde(default = "default_dft")]
    pub prior: PriorSpec,
    #[serde(default)]
    pub channel: ChannelParams,
    pub ratio: f64,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_bp")]
    pub solver: SolverConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_dft")]
    pub prior: PriorSpec,
    pub source: SignalSource,
    pub ratios: Vec<f64>,
    pub snrs_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_bp")]
    pub solver: SolverConfig,
    /// Reference learner for non-sequential sources.
    #[serde(default = "default_weak")]
    pub weak: SolverConfig,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Draw `Φ` with orthonormal rows instead of i.i.d. Gaussian entries.
    #[serde(default)]
    pub unitary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopkConfig {
    #[serde(default = "default_haar")]
    pub prior: PriorSpec,
    pub image: SignalSource,
    pub keep_fractions: Vec<f64>,
    /// Number of column-block mean references.
    #[serde(default = "default_refs")]
    pub references: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageCsConfig {
    #[serde(default = "default_haar")]
    pub prior: PriorSpec,
    pub image: SignalSource,
    pub ratios: Vec<f64>,
    pub snrs_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_lasso")]
    pub solver: SolverConfig,
    #[serde(default = "default_refs")]
    pub references: usize,
    #[serde(default = "default_image_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub unitary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PipelineConfig {
    Boost(BoostConfig),
    WeakGuidesStrong(GuidedConfig),
    SequentialEstimation(SequentialConfig),
    PhaseTransitionSweep(SweepConfig),
    ImageTopk(TopkConfig),
    ImageCs(ImageCsConfig),
}

impl PipelineConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineConfig::Boost(_) => "boost",
            PipelineConfig::WeakGuidesStrong(_) => "weak_guides_strong",
            PipelineConfig::SequentialEstimation(_) => "sequential_estimation",
            PipelineConfig::PhaseTransitionSweep(_) => "phase_transition_sweep",
            PipelineConfig::ImageTopk(_) => "image_topk",
            PipelineConfig::ImageCs(_) => "image_cs",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub pipeline: PipelineConfig,
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(config: &RunConfig) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            seed: config.seed,
            config: config.clone(),
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(msg()))
    }
}

fn check_solver(field: &str, s: &SolverConfig) -> Result<()> {
    s.validate().map_err(|e| Error::config(format!("{field}: {e}")))
}

fn check_ratios(ratios: &[f64]) -> Result<()> {
    check(!ratios.is_empty(), || "ratios: empty".into())?;
    for &r in ratios {
        check(r > 0.0 && r <= 1.0, || format!("ratios: {r} outside (0, 1]"))?;
    }
    Ok(())
}

fn check_snr(snr: Option<f64>) -> Result<()> {
    check(snr.map_or(true, |s| s.is_finite()), || "snr_db must be finite (omit for noiseless)".into())
}

fn check_source(field: &str, src: &SignalSource, allowed: &[&str]) -> Result<()> {
    let kind = match src {
        SignalSource::SyntheticAudio(p) => {
            p.validate().map_err(|e| Error::config(format!("{field}: {e}")))?;
            "synthetic_audio"
        }
        SignalSource::SyntheticChannel(p) => {
            p.validate().map_err(|e| Error::config(format!("{field}: {e}")))?;
            "synthetic_channel"
        }
        SignalSource::SyntheticImage(_) => "synthetic_image",
        SignalSource::File { format: FileFormat::Csv, .. } => "file_csv",
        SignalSource::File { format: FileFormat::Pgm, .. } => "file_pgm",
    };
    check(allowed.contains(&kind), || format!("{field}: source {kind} not usable here (expected one of {allowed:?})"))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.schema_version == SCHEMA_VERSION, || {
            format!("schema_version: {} unsupported (expected {SCHEMA_VERSION})", self.schema_version)
        })?;
        match &self.pipeline {
            PipelineConfig::Boost(c) => {
                check_source("signal", &c.signal, &["synthetic_audio", "file_csv"])?;
                check(c.measurements >= 1, || "measurements must be ≥ 1".into())?;
                check(c.rounds >= 1, || "rounds must be ≥ 1".into())?;
                check(c.trials >= 1, || "trials must be ≥ 1".into())?;
                check_snr(c.snr_db)?;
                check_solver("weak", &c.weak)
            }
            PipelineConfig::WeakGuidesStrong(c) => {
                check_source("signal", &c.signal, &["synthetic_audio", "file_csv"])?;
                check(c.measurements >= 1, || "measurements must be ≥ 1".into())?;
                check(!c.hyper_sweep.is_empty(), || "hyper_sweep: empty".into())?;
                check(c.trials >= 1, || "trials must be ≥ 1".into())?;
                check_snr(c.snr_db)?;
                check_solver("weak", &c.weak)?;
                check_solver("strong", &c.strong)?;
                for &h in &c.hyper_sweep {
                    check_solver("hyper_sweep", &c.strong.with_hyper(h))?;
                }
                Ok(())
            }
            PipelineConfig::SequentialEstimation(c) => {
                c.channel.validate().map_err(|e| Error::config(format!("channel: {e}")))?;
                check_ratios(&[c.ratio])?;
                check(c.trials >= 1, || "trials must be ≥ 1".into())?;
                check_snr(c.snr_db)?;
                check_solver("solver", &c.solver)
            }
            PipelineConfig::PhaseTransitionSweep(c) => {
                check_source("source", &c.source, &["synthetic_channel", "synthetic_audio", "file_csv"])?;
                check_ratios(&c.ratios)?;
                check(!c.snrs_db.is_empty(), || "snrs_db: empty".into())?;
                for &s in &c.snrs_db {
                    check_snr(Some(s))?;
                }
                check(c.trials >= 1, || "trials must be ≥ 1".into())?;
                check(c.threshold >= 0.0, || "threshold must be ≥ 0".into())?;
                check_solver("solver", &c.solver)?;
                check_solver("weak", &c.weak)
            }
            PipelineConfig::ImageTopk(c) => {
                check_source("image", &c.image, &["synthetic_image", "file_pgm"])?;
                check(!c.keep_fractions.is_empty(), || "keep_fractions: empty".into())?;
                for &f in &c.keep_fractions {
                    check(f > 0.0 && f <= 1.0, || format!("keep_fractions: {f} outside (0, 1]"))?;
                }
                check(c.references >= 1, || "references must be ≥ 1".into())
            }
            PipelineConfig::ImageCs(c) => {
                check_source("image", &c.image, &["synthetic_image", "file_pgm"])?;
                check_ratios(&c.ratios)?;
                check(!c.snrs_db.is_empty(), || "snrs_db: empty".into())?;
                for &s in &c.snrs_db {
                    check_snr(Some(s))?;
                }
                check(c.trials >= 1, || "trials must be ≥ 1".into())?;
                check(c.references >= 1, || "references must be ≥ 1".into())?;
                check(c.threshold >= 0.0, || "threshold must be ≥ 0".into())?;
                check_solver("solver", &c.solver)
            }
        }
    }

    /// Makes relative file-source paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |src: &mut SignalSource| {
            if let SignalSource::File { path, .. } = src {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        match &mut self.pipeline {
            PipelineConfig::Boost(c) => fix(&mut c.signal),
            PipelineConfig::WeakGuidesStrong(c) => fix(&mut c.signal),
            PipelineConfig::SequentialEstimation(_) => {}
            PipelineConfig::PhaseTransitionSweep(c) => fix(&mut c.source),
            PipelineConfig::ImageTopk(c) => fix(&mut c.image),
            PipelineConfig::ImageCs(c) => fix(&mut c.image),
        }
    }
}

/// Parses a config, or the `config` member of a manifest, naming the
/// offending field on failure.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON: {e}")))?;
    let is_manifest = value.get("tool_version").is_some() && value.get("config").is_some();
    let cfg = if is_manifest {
        let m: Manifest = serde_path_to_error::deserialize(value).map_err(path_error)?;
        m.config
    } else {
        serde_path_to_error::deserialize(value).map_err(path_error)?
    };
    cfg.validate()?;
    Ok(cfg)
}

fn path_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    if path == "." {
        Error::config(e.into_inner().to_string())
    } else {
        Error::config(format!("{path}: {}", e.into_inner()))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = path.parent() {
        cfg.resolve_paths(dir);
    }
    Ok(cfg)
}
