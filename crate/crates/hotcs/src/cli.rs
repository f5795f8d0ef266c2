//! Command-line entry points. Machine-readable output goes to stdout, human
//! diagnostics to stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use hotcs_core::metrics::{domain_compare, sparsity_profile};
use hotcs_core::{construct_hot_multi, CVector, Pivots, PosteriorTransform, ReferenceSet};
use serde::Serialize;
use serde_json::json;

use crate::config::{load_config, Manifest, PriorSpec};
use crate::error::{Error, Result};
use crate::io;
use crate::pipelines;

#[derive(Debug, Parser)]
#[command(name = "hotcs", version, about = "Householder-corrected transforms for compressed sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a pipeline described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides the config's `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Build a posterior transform from reference vectors.
    Hot {
        /// dft, dct, haar, haar:<levels> or identity.
        prior: String,
        /// CSV files, one reference each.
        #[arg(required = true)]
        references: Vec<PathBuf>,
        /// Output JSON file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated 0-based pivots (automatic when omitted).
        #[arg(long, value_delimiter = ',')]
        pivots: Option<Vec<usize>>,
    },
    /// Sparsity measures of a vector.
    Metrics {
        vector: PathBuf,
        /// Energy-concentration orders (repeatable).
        #[arg(long = "k")]
        k: Vec<usize>,
    },
}

/// Parses `args` and runs the command, returning the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { config, out, seed, threads } => cmd_run(&config, out, seed, threads),
        Command::Hot { prior, references, out, pivots } => cmd_hot(&prior, &references, out.as_deref(), pivots),
        Command::Metrics { vector, k } => cmd_metrics(&vector, &k),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hotcs: {e}");
            e.exit_code()
        }
    }
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

pub fn cmd_run(config: &Path, out: Option<PathBuf>, seed: Option<u64>, threads: Option<usize>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("hotcs-out"));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::config("--threads must be ≥ 1"));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::config(format!("thread pool: {e}")))?;
    eprintln!("hotcs: running {} (seed {})", cfg.pipeline.name(), cfg.seed);
    let report = pool.install(|| pipelines::run(&cfg))?;
    report.write(&dir)?;
    io::write_json(&Manifest::new(&cfg), dir.join("manifest.json"))?;
    eprintln!("hotcs: wrote {}", dir.display());
    print_json(&report.summary);
    Ok(())
}

#[derive(Serialize)]
struct HotDiagnostics {
    pivots: Vec<usize>,
    alpha_abs: Vec<f64>,
    trivial_flags: Vec<bool>,
    factors: usize,
    relative_error: f64,
    column_correlation: f64,
    /// Largest off-support magnitude of `D_postᴴ r_i`, relative to `‖r_i‖`.
    constraint_residuals: Vec<f64>,
}

fn diagnostics(t: &PosteriorTransform, refs: &[CVector]) -> Result<HotDiagnostics> {
    let cmp = domain_compare(&t.synthesis_matrix(), t.prior().matrix())?;
    let pivots = t.pivots();
    let mut residuals = Vec::with_capacity(refs.len());
    for (i, r) in refs.iter().enumerate() {
        let w = t.analyze(r)?;
        let allowed = &pivots[..=i];
        let off = w.iter().enumerate().filter(|(k, _)| !allowed.contains(k)).fold(0.0f64, |m, (_, z)| m.max(z.norm()));
        residuals.push(off / r.norm());
    }
    Ok(HotDiagnostics {
        pivots,
        alpha_abs: t.alphas().iter().map(|a| a.norm()).collect(),
        trivial_flags: t.trivial_flags(),
        factors: t.num_factors(),
        relative_error: cmp.relative_error,
        column_correlation: cmp.column_correlation,
        constraint_residuals: residuals,
    })
}

pub fn cmd_hot(prior: &str, references: &[PathBuf], out: Option<&Path>, pivots: Option<Vec<usize>>) -> Result<()> {
    let spec: PriorSpec = prior.parse()?;
    let refs = references.iter().map(io::load_csv_vector).collect::<Result<Vec<_>>>()?;
    let set = ReferenceSet::new(refs.clone())?;
    let prior = spec.build(set.dim())?;
    let pivots = match pivots {
        Some(p) => Pivots::Explicit(p),
        None => Pivots::Auto,
    };
    let t = construct_hot_multi(&prior, &set, &pivots)?;
    let doc = json!({ "transform": t, "diagnostics": diagnostics(&t, &refs)? });
    match out {
        Some(path) => {
            io::write_json(&doc, path)?;
            eprintln!("hotcs: wrote {}", path.display());
        }
        None => print_json(&doc),
    }
    Ok(())
}

pub fn cmd_metrics(vector: &Path, ks: &[usize]) -> Result<()> {
    let v = io::load_csv_vector(vector)?;
    let ks = if ks.is_empty() { vec![1] } else { ks.to_vec() };
    let p = sparsity_profile(&v, &ks)?;
    let gamma: serde_json::Map<String, serde_json::Value> = p.gamma.iter().map(|(k, g)| (k.to_string(), json!(g))).collect();
    print_json(&json!({
        "n": v.len(),
        "l0": p.l0,
        "l1": p.l1,
        "l2": p.l2,
        "odd": p.odd,
        "gamma": gamma,
    }));
    Ok(())
}
