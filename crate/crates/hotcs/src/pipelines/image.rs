use std::time::Instant;

use hotcs_core::datagen::{derive_seed, gaussian_matrix, orthonormal_rows, rng_from_seed, Image};
use hotcs_core::solvers::SolverConfig;
use hotcs_core::{construct_hot_multi, CMatrix, CVector, Pivots, PosteriorTransform, PriorTransform, ReferenceSet, C64};
use serde_json::json;

use super::sweep::grid_report;
use super::*;
use crate::config::{ImageCsConfig, PriorSpec, TopkConfig};

/// Column-block means of `img` as a reference set.
pub fn image_references(img: &Image, blocks: usize) -> Result<ReferenceSet> {
    let means = img.column_means(blocks)?;
    let refs = means.iter().map(|m| CVector::from_real(m)).collect::<hotcs_core::Result<Vec<_>>>()?;
    Ok(ReferenceSet::new(refs)?)
}

fn column_vectors(img: &Image) -> Vec<CVector> {
    img.columns().iter().map(|c| CVector::from_real(c).expect("image data is finite and nonempty")).collect()
}

/// Image NMSE `‖X̂ − X‖²_F / ‖X‖²_F` over columns.
fn stacked_nmse(est: &[CVector], truth: &[CVector]) -> f64 {
    let mut err = 0.0;
    let mut energy = 0.0;
    for (e, t) in est.iter().zip(truth) {
        err += e.iter().zip(t.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
        energy += t.norm_sq();
    }
    err / energy
}

fn stacked_corr(est: &[CVector], truth: &[CVector]) -> f64 {
    let mut ip = C64::new(0.0, 0.0);
    let (mut ne, mut nt) = (0.0, 0.0);
    for (e, t) in est.iter().zip(truth) {
        ip += e.iter().zip(t.iter()).map(|(a, b)| a.conj() * b).sum::<C64>();
        ne += e.norm_sq();
        nt += t.norm_sq();
    }
    if ne == 0.0 {
        0.0
    } else {
        (ip.norm() / (ne * nt).sqrt()).min(1.0)
    }
}

/// NMSE after keeping the `⌈f·total⌉` largest coefficients of all columns.
pub fn topk_nmse(columns: &[CVector], t: &PosteriorTransform, keep_fraction: f64) -> Result<(usize, f64)> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::config(format!("keep fraction {keep_fraction} outside (0, 1]")));
    }
    let coeffs: Vec<CVector> = columns.iter().map(|c| t.analyze(c)).collect::<hotcs_core::Result<_>>()?;
    let n = t.dim();
    let total = n * coeffs.len();
    let keep = ((keep_fraction * total as f64).ceil() as usize).min(total);
    if keep == 0 {
        return Err(Error::config("keep fraction retains no coefficients"));
    }
    let mut order: Vec<(f64, usize)> =
        coeffs.iter().enumerate().flat_map(|(j, w)| w.iter().enumerate().map(move |(i, z)| (z.norm(), j * n + i))).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut kept = vec![vec![C64::new(0.0, 0.0); n]; coeffs.len()];
    for &(_, k) in &order[..keep] {
        kept[k / n][k % n] = coeffs[k / n][k % n];
    }
    let recon: Vec<CVector> = kept
        .into_iter()
        .map(|w| t.synthesize(&CVector::new(w).expect("finite coefficients")))
        .collect::<hotcs_core::Result<_>>()?;
    Ok((keep, stacked_nmse(&recon, columns)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopkResult {
    pub keep_fraction: f64,
    pub kept: usize,
    pub nmse_prior: f64,
    pub nmse_hot: f64,
}

/// Top-k compression of the columns of `img` in the prior and in the HOT
/// domain built from `refs`.
pub fn image_topk_compression(img: &Image, prior: &PriorTransform, refs: &ReferenceSet, keep_fraction: f64) -> Result<TopkResult> {
    let hot = construct_hot_multi(prior, refs, &Pivots::Auto)?;
    let cols = column_vectors(img);
    let (kept, nmse_prior) = topk_nmse(&cols, &PosteriorTransform::trivial(prior), keep_fraction)?;
    let (_, nmse_hot) = topk_nmse(&cols, &hot, keep_fraction)?;
    Ok(TopkResult { keep_fraction, kept, nmse_prior, nmse_hot })
}

fn build_prior(spec: &PriorSpec, img: &Image) -> Result<PriorTransform> {
    if let PriorSpec::Haar(levels) = spec {
        let levels = levels.unwrap_or_else(|| hotcs_core::priors::max_haar_levels(img.rows()));
        io::check_dyadic(img, levels)?;
    }
    prior_for(spec, img.rows())
}

pub(super) fn run_topk(c: &TopkConfig, seed: u64) -> Result<PipelineReport> {
    let img = image_source(&c.image, seed)?;
    let prior = build_prior(&c.prior, &img)?;
    let refs = image_references(&img, c.references)?;
    let hot = stage(|| "HOT construction".into(), construct_hot_multi(&prior, &refs, &Pivots::Auto))?;
    let cols = column_vectors(&img);
    let base = PosteriorTransform::trivial(&prior);
    let results = par_map(c.keep_fractions.len(), |k| {
        let f = c.keep_fractions[k];
        let (kept, nmse_prior) = topk_nmse(&cols, &base, f)?;
        let (_, nmse_hot) = topk_nmse(&cols, &hot, f)?;
        Ok(TopkResult { keep_fraction: f, kept, nmse_prior, nmse_hot })
    })?;
    let mut table = Table::new(&["keep_fraction", "kept", "nmse_prior", "nmse_hot", "hot_over_prior"]);
    for r in &results {
        table.push(vec![
            fmt_f(r.keep_fraction),
            r.kept.to_string(),
            fmt_f(r.nmse_prior),
            fmt_f(r.nmse_hot),
            fmt_f(r.nmse_hot / r.nmse_prior),
        ]);
    }
    let summary = json!({
        "rows": img.rows(),
        "cols": img.cols(),
        "references": c.references,
        "factors": hot.num_factors(),
        "prior": c.prior.to_string(),
    });
    Ok(PipelineReport { table, summary, timing: json!({}) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageCsCell {
    pub nmse_prior: f64,
    pub nmse_hot: f64,
    pub corr_prior: f64,
    pub corr_hot: f64,
    pub unconverged_prior: usize,
    pub unconverged_hot: usize,
    pub estimates_prior: Vec<CVector>,
    pub estimates_hot: Vec<CVector>,
}

/// Column-wise compressed sensing of `img` with one shared `Φ`.
#[allow(clippy::too_many_arguments)]
pub fn image_cs_cell(
    img: &Image,
    prior: &PriorTransform,
    hot: &PosteriorTransform,
    m: usize,
    snr_db: Option<f64>,
    solver: &SolverConfig,
    unitary: bool,
    seed: u64,
) -> Result<ImageCsCell> {
    let n = img.rows();
    let mut rng = rng_from_seed(derive_seed(seed, &[STREAM_PHI]));
    let phi: CMatrix = if unitary { orthonormal_rows(&mut rng, m, n, false)? } else { gaussian_matrix(&mut rng, m, n, false)? };
    let base = PosteriorTransform::trivial(prior);
    let a_prior = base.sensing_matrix(&phi)?;
    let mut a_hot = a_prior.clone();
    hot.right_apply_factors(&mut a_hot)?;
    let cols = column_vectors(img);
    let per_col = par_map(cols.len(), |j| {
        let meas = measure_with(&cols[j], phi.clone(), snr_db, false, derive_seed(seed, &[STREAM_NOISE, j as u64]))?;
        let (y, s2) = (&meas.y, meas.model.sigma2());
        let rp = stage(|| format!("column {j}: prior solve"), solver.solve(&a_prior, y, s2))?;
        let rh = stage(|| format!("column {j}: HOT solve"), solver.solve(&a_hot, y, s2))?;
        Ok((base.synthesize(&rp.coeffs)?, hot.synthesize(&rh.coeffs)?, rp.converged, rh.converged))
    })?;
    let estimates_prior: Vec<CVector> = per_col.iter().map(|r| r.0.clone()).collect();
    let estimates_hot: Vec<CVector> = per_col.iter().map(|r| r.1.clone()).collect();
    Ok(ImageCsCell {
        nmse_prior: stacked_nmse(&estimates_prior, &cols),
        nmse_hot: stacked_nmse(&estimates_hot, &cols),
        corr_prior: stacked_corr(&estimates_prior, &cols),
        corr_hot: stacked_corr(&estimates_hot, &cols),
        unconverged_prior: per_col.iter().filter(|r| !r.2).count(),
        unconverged_hot: per_col.iter().filter(|r| !r.3).count(),
        estimates_prior,
        estimates_hot,
    })
}

pub(super) fn run_cs(c: &ImageCsConfig, seed: u64) -> Result<PipelineReport> {
    let img = image_source(&c.image, seed)?;
    let prior = build_prior(&c.prior, &img)?;
    let refs = image_references(&img, c.references)?;
    let hot = stage(|| "HOT construction".into(), construct_hot_multi(&prior, &refs, &Pivots::Auto))?;
    let grid: Vec<(f64, f64)> = c.ratios.iter().flat_map(|&r| c.snrs_db.iter().map(move |&s| (r, s))).collect();
    let start = Instant::now();
    let trials = par_map(grid.len() * c.trials, |k| {
        let (cell, trial) = (k / c.trials, k % c.trials);
        let (ratio, snr) = grid[cell];
        let m = measurements_for(ratio, img.rows());
        image_cs_cell(&img, &prior, &hot, m, Some(snr), &c.solver, c.unitary, derive_seed(seed, &[cell as u64, trial as u64]))
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    let cells: Vec<SweepCell> = grid
        .iter()
        .enumerate()
        .map(|(cell, &(ratio, snr_db))| {
            let ts = &trials[cell * c.trials..(cell + 1) * c.trials];
            let avg = |f: fn(&ImageCsCell) -> f64| mean(&ts.iter().map(f).collect::<Vec<_>>());
            SweepCell {
                ratio,
                snr_db,
                nmse_prior: avg(|t| t.nmse_prior),
                nmse_hot: avg(|t| t.nmse_hot),
                corr_prior: avg(|t| t.corr_prior),
                corr_hot: avg(|t| t.corr_hot),
                unconverged_prior: ts.iter().map(|t| t.unconverged_prior).sum(),
                unconverged_hot: ts.iter().map(|t| t.unconverged_hot).sum(),
            }
        })
        .collect();
    Ok(grid_report(&cells, c.threshold, c.trials, elapsed))
}
