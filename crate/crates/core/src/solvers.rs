//! Sparse recovery: orthogonal matching pursuit, LASSO and basis pursuit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix, CVector, IncrementalQr, C64, ZERO};
use crate::metrics::L0_TOL;

/// Largest gradient-mapping entry, relative to λ, at which the proximal
/// iterations stop.
pub const KKT_TOL: f64 = 1e-6;
/// Slack added to the BP constraint, relative to `‖y‖`.
pub const BP_FEAS_TOL: f64 = 1e-8;

const POWER_ITERS: usize = 300;
const LIPSCHITZ_MARGIN: f64 = 1.0 + 1e-12;
const CONTINUATION: f64 = 0.5;
const STAGE_TOL: f64 = 1e-3;
const ROOT_STEPS: usize = 30;
const ROOT_TOL: f64 = 1e-12;

/// `y = Φx + n` bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    phi: CMatrix,
    sigma2: f64,
    snr_db: f64,
}

impl MeasurementModel {
    pub fn new(phi: CMatrix, sigma2: f64, snr_db: f64) -> Result<Self> {
        if phi.rows() > phi.cols() {
            return Err(invalid(format!("{} measurements exceed dimension {}", phi.rows(), phi.cols())));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(invalid(format!("noise variance {sigma2}")));
        }
        if let Some(j) = (0..phi.cols()).find(|&j| phi.column_norm(j) == 0.0) {
            return Err(Error::ZeroColumn(j));
        }
        Ok(MeasurementModel { phi, sigma2, snr_db })
    }

    pub fn phi(&self) -> &CMatrix {
        &self.phi
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn m(&self) -> usize {
        self.phi.rows()
    }

    pub fn n(&self) -> usize {
        self.phi.cols()
    }

    pub fn measure_clean(&self, x: &CVector) -> Result<CVector> {
        self.phi.apply(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub coeffs: CVector,
    pub support: Vec<usize>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// OMP: residual norm after each selection. LASSO/BP: objective per
    /// accepted iteration.
    #[serde(skip)]
    pub history: Vec<f64>,
}

fn thresholded(w: &[C64]) -> Vec<usize> {
    let thr = L0_TOL * linalg::norm(w);
    w.iter().enumerate().filter(|(_, z)| z.norm() > thr).map(|(i, _)| i).collect()
}

fn finish(a: &CMatrix, y: &CVector, w: Vec<C64>, iterations: usize, converged: bool, history: Vec<f64>) -> SolverResult {
    let ax = a.apply_slice(&w);
    let residual_norm = libm::sqrt(ax.iter().zip(y.iter()).map(|(p, q)| (p - q).norm_sqr()).sum());
    SolverResult { support: thresholded(&w), coeffs: CVector::from_raw(w), residual_norm, iterations, converged, history }
}

fn check_dims(a: &CMatrix, y: &CVector) -> Result<()> {
    if a.rows() != y.len() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: y.len() });
    }
    Ok(())
}

/// Greedy orthogonal matching pursuit.
pub fn omp(a: &CMatrix, y: &CVector, max_atoms: usize, residual_tol: f64) -> Result<SolverResult> {
    check_dims(a, y)?;
    let (m, n) = (a.rows(), a.cols());
    if max_atoms == 0 || max_atoms > n {
        return Err(invalid(format!("max_atoms = {max_atoms} outside 1..={n}")));
    }
    if max_atoms > m {
        return Err(Error::RankDeficient(max_atoms));
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column_norm(j)).collect();
    if let Some(j) = norms.iter().position(|&c| c == 0.0) {
        return Err(Error::ZeroColumn(j));
    }
    let adj = a.adjoint();
    let y_norm = y.norm();
    let stop = residual_tol.max(0.0) * y_norm;
    let mut residual = y.as_slice().to_vec();
    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; n];
    let mut qr = IncrementalQr::new(m);
    let mut x_s: Vec<C64> = Vec::new();
    let mut history = Vec::new();
    let mut res_norm = y_norm;
    let mut converged = res_norm <= stop;
    while !converged && active.len() < max_atoms {
        let c = adj.apply_slice(&residual);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if in_active[j] {
                continue;
            }
            let score = c[j].norm() / norms[j];
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        let col: Vec<C64> = (0..m).map(|i| a.get(i, j)).collect();
        if qr.push(&col, 1e-12)?.is_none() {
            break;
        }
        active.push(j);
        in_active[j] = true;
        x_s = qr.solve(y.as_slice());
        residual = y.as_slice().to_vec();
        for (k, &jk) in active.iter().enumerate() {
            for (i, ri) in residual.iter_mut().enumerate() {
                *ri -= a.get(i, jk) * x_s[k];
            }
        }
        res_norm = linalg::norm(&residual);
        history.push(res_norm);
        converged = res_norm <= stop;
    }
    let mut w = vec![ZERO; n];
    for (k, &j) in active.iter().enumerate() {
        w[j] = x_s[k];
    }
    let converged = converged || active.len() == max_atoms;
    Ok(finish(a, y, w, active.len(), converged, history))
}

/// Magnitude shrinkage preserving phase.
pub fn soft_threshold(z: C64, t: f64) -> C64 {
    let m = z.norm();
    if m <= t {
        ZERO
    } else {
        z * ((m - t) / m)
    }
}

/// Estimate of `σ_max(A)²` by power iteration on `AᴴA`.
pub fn lipschitz_estimate(a: &CMatrix) -> f64 {
    let n = a.cols();
    let mut v: Vec<C64> = (0..n).map(|j| C64::new(1.0 + j as f64 / n as f64, 0.0)).collect();
    let mut est = 0.0;
    for _ in 0..POWER_ITERS {
        let nv = linalg::norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        for z in v.iter_mut() {
            *z /= nv;
        }
        let av = a.apply_slice(&v);
        let next = linalg::norm_sq(&av);
        v = a.adjoint_apply_slice(&av);
        if (next - est).abs() <= 1e-13 * next {
            est = next;
            break;
        }
        est = next;
    }
    est
}

struct Lasso<'a> {
    a: &'a CMatrix,
    y: &'a [C64],
    y_norm: f64,
    l: f64,
}

fn sub(p: &[C64], q: &[C64]) -> Vec<C64> {
    p.iter().zip(q).map(|(a, b)| a - b).collect()
}

fn l1(w: &[C64]) -> f64 {
    w.iter().map(|z| z.norm()).sum()
}

impl Lasso<'_> {
    fn objective(&self, w: &[C64], lambda: f64) -> f64 {
        0.5 * linalg::norm_sq(&sub(&self.a.apply_slice(w), self.y)) + lambda * l1(w)
    }

    /// Proximal gradient step from `v` given `av = Av`, doubling `l` until
    /// the quadratic upper bound holds. Returns `z`, `Az` and the objective.
    fn prox_step(&mut self, v: &[C64], av: &[C64], lambda: f64) -> (Vec<C64>, Vec<C64>, f64) {
        let r = sub(av, self.y);
        let fv = 0.5 * linalg::norm_sq(&r);
        let g = self.a.adjoint_apply_slice(&r);
        // roundoff in the residual is ~ eps·‖y‖ per entry
        let slack = 1e-12 * (fv + self.y_norm * libm::sqrt(2.0 * fv));
        loop {
            let inv_l = 1.0 / self.l;
            let z: Vec<C64> =
                v.iter().zip(&g).map(|(vi, gi)| soft_threshold(vi - gi * inv_l, lambda * inv_l)).collect();
            let az = self.a.apply_slice(&z);
            let fz = 0.5 * linalg::norm_sq(&sub(&az, self.y));
            let mut lin = 0.0;
            let mut quad = 0.0;
            for ((zi, vi), gi) in z.iter().zip(v).zip(&g) {
                let d = zi - vi;
                lin += (gi.conj() * d).re;
                quad += d.norm_sqr();
            }
            if fz <= fv + lin + 0.5 * self.l * quad + slack {
                let obj = fz + lambda * l1(&z);
                return (z, az, obj);
            }
            self.l *= 2.0;
        }
    }

    /// Monotone accelerated proximal gradient with restart. Returns the
    /// iterate, the iterations spent and whether the stopping test fired.
    fn solve(&mut self, start: Vec<C64>, lambda: f64, tol: f64, budget: usize, history: &mut Vec<f64>) -> (Vec<C64>, usize, bool) {
        let mut x = start;
        let mut ax = self.a.apply_slice(&x);
        let mut fx = self.objective(&x, lambda);
        let mut v = x.clone();
        let mut av = ax.clone();
        let mut t = 1.0;
        for it in 1..=budget {
            let (z, az, fz) = self.prox_step(&v, &av, lambda);
            let step = z.iter().zip(&v).fold(0.0f64, |m, (p, q)| m.max((p - q).norm()));
            let settled = self.l * step <= tol * lambda;
            if fz <= fx {
                let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
                let beta = (t - 1.0) / t_next;
                v = z.iter().zip(&x).map(|(p, q)| p + (p - q) * beta).collect();
                av = az.iter().zip(&ax).map(|(p, q)| p + (p - q) * beta).collect();
                x = z;
                ax = az;
                fx = fz;
                t = t_next;
                history.push(fx);
                if settled {
                    return (x, it, true);
                }
            } else if settled {
                return (z, it, true);
            } else {
                // restart momentum from the best point
                v = x.clone();
                av = ax.clone();
                t = 1.0;
            }
        }
        (x, budget, false)
    }
}

fn lasso_inner<'a>(a: &'a CMatrix, y: &'a CVector) -> Option<Lasso<'a>> {
    let l = lipschitz_estimate(a) * LIPSCHITZ_MARGIN;
    (l > 0.0).then(|| Lasso { a, y: y.as_slice(), y_norm: y.norm(), l })
}

/// `min ½‖Aw − y‖² + λ‖w‖₁`
pub fn lasso(a: &CMatrix, y: &CVector, lambda: f64, max_iters: usize) -> Result<SolverResult> {
    check_dims(a, y)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("lambda = {lambda}")));
    }
    let n = a.cols();
    if lambda >= lambda_max(a, y)? {
        return Ok(finish(a, y, vec![ZERO; n], 0, true, Vec::new()));
    }
    let Some(mut prob) = lasso_inner(a, y) else {
        return Ok(finish(a, y, vec![ZERO; n], 0, true, Vec::new()));
    };
    let mut history = Vec::new();
    let (w, it, ok) = prob.solve(vec![ZERO; n], lambda, KKT_TOL, max_iters.max(1), &mut history);
    Ok(finish(a, y, w, it, ok, history))
}

/// `‖Aᴴy‖_∞`, the smallest λ with an all-zero LASSO solution.
pub fn lambda_max(a: &CMatrix, y: &CVector) -> Result<f64> {
    check_dims(a, y)?;
    Ok(a.adjoint_apply_slice(y.as_slice()).iter().fold(0.0, |m, z| m.max(z.norm())))
}

/// `min ‖w‖₁ s.t. ‖Aw − y‖₂ ≤ ε` by continuation over the LASSO weight.
pub fn bp(a: &CMatrix, y: &CVector, epsilon: f64, max_iters: usize) -> Result<SolverResult> {
    check_dims(a, y)?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(invalid(format!("epsilon = {epsilon}")));
    }
    let n = a.cols();
    let target = epsilon + BP_FEAS_TOL * y.norm();
    let lmax = lambda_max(a, y)?;
    if y.norm() <= target || lmax == 0.0 {
        return Ok(finish(a, y, vec![ZERO; n], 0, y.norm() <= target, Vec::new()));
    }
    let mut prob = lasso_inner(a, y).expect("nonzero operator");
    let residual = |w: &[C64]| {
        let r = a.apply_slice(w);
        libm::sqrt(r.iter().zip(y.iter()).map(|(p, q)| (p - q).norm_sqr()).sum())
    };
    let mut history = Vec::new();
    let mut spent = 0usize;
    let mut w = vec![ZERO; n];
    let mut lambda = lmax;
    let mut f_hi = y.norm() - target;
    let mut feasible: Option<(Vec<C64>, f64, f64)> = None;
    while spent < max_iters {
        lambda *= CONTINUATION;
        let (next, it, _) = prob.solve(w, lambda, STAGE_TOL, max_iters - spent, &mut history);
        spent += it;
        w = next;
        let f = residual(&w) - target;
        if f <= 0.0 {
            feasible = Some((w.clone(), lambda, f));
            break;
        }
        f_hi = f;
        if lambda < 1e-300 {
            break;
        }
    }
    let Some((mut best, mut lo, mut f_lo)) = feasible else {
        return Ok(finish(a, y, w, spent, false, history));
    };
    let mut polished = false;
    // Illinois iterations on residual(λ) = target
    let mut hi = lo / CONTINUATION;
    let mut side = 0i8;
    let mut f_best = f_lo;
    for _ in 0..ROOT_STEPS {
        if spent >= max_iters || f_best >= -ROOT_TOL * y.norm() {
            break;
        }
        let mut mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(mid > lo && mid < hi) {
            mid = libm::sqrt(lo * hi);
        }
        let (cand, it, _) = prob.solve(best.clone(), mid, KKT_TOL, max_iters - spent, &mut history);
        spent += it;
        let f = residual(&cand) - target;
        if f <= 0.0 {
            best = cand;
            lo = mid;
            f_lo = f;
            f_best = f;
            polished = true;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            f_hi = f;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    let mut start = best.clone();
    while !polished && spent < max_iters && lo > 1e-300 {
        let (cand, it, _) = prob.solve(start, lo, KKT_TOL, max_iters - spent, &mut history);
        spent += it;
        if residual(&cand) <= target {
            best = cand;
            break;
        }
        start = cand;
        lo *= CONTINUATION;
    }
    Ok(finish(a, y, best, spent, true, history))
}

/// Solver choice with data-relative hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverConfig {
    Omp {
        max_atoms: usize,
        #[serde(default)]
        residual_tol: f64,
    },
    /// `λ = lambda_scale·‖Aᴴy‖_∞`
    Lasso {
        lambda_scale: f64,
        #[serde(default = "default_iters")]
        max_iters: usize,
    },
    /// `ε = epsilon_scale·√(Mσ²)`
    Bp {
        epsilon_scale: f64,
        #[serde(default = "default_iters")]
        max_iters: usize,
    },
}

fn default_iters() -> usize {
    5000
}

impl SolverConfig {
    pub fn with_hyper(&self, value: f64) -> SolverConfig {
        match *self {
            SolverConfig::Omp { residual_tol, .. } => {
                SolverConfig::Omp { max_atoms: libm::round(value).max(1.0) as usize, residual_tol }
            }
            SolverConfig::Lasso { max_iters, .. } => SolverConfig::Lasso { lambda_scale: value, max_iters },
            SolverConfig::Bp { max_iters, .. } => SolverConfig::Bp { epsilon_scale: value, max_iters },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SolverConfig::Omp { max_atoms, residual_tol } => {
                if max_atoms == 0 || !(residual_tol >= 0.0) {
                    return Err(invalid("omp needs max_atoms ≥ 1 and residual_tol ≥ 0"));
                }
            }
            SolverConfig::Lasso { lambda_scale, max_iters } => {
                if !(lambda_scale > 0.0) || max_iters == 0 {
                    return Err(invalid("lasso needs lambda_scale > 0 and max_iters ≥ 1"));
                }
            }
            SolverConfig::Bp { epsilon_scale, max_iters } => {
                if !(epsilon_scale >= 0.0) || max_iters == 0 {
                    return Err(invalid("bp needs epsilon_scale ≥ 0 and max_iters ≥ 1"));
                }
            }
        }
        Ok(())
    }

    /// Runs the solver for `y ≈ A w` with noise variance `sigma2`.
    pub fn solve(&self, a: &CMatrix, y: &CVector, sigma2: f64) -> Result<SolverResult> {
        match *self {
            SolverConfig::Omp { max_atoms, residual_tol } => omp(a, y, max_atoms, residual_tol),
            SolverConfig::Lasso { lambda_scale, max_iters } => {
                let lm = lambda_max(a, y)?;
                if lm == 0.0 {
                    return Ok(finish(a, y, vec![ZERO; a.cols()], 0, true, Vec::new()));
                }
                lasso(a, y, lambda_scale * lm, max_iters)
            }
            SolverConfig::Bp { epsilon_scale, max_iters } => {
                let eps = epsilon_scale * libm::sqrt(a.rows() as f64 * sigma2.max(0.0));
                bp(a, y, eps, max_iters)
            }
        }
    }
}
