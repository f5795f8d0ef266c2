//! Householder-corrected posterior transforms.
//!
//! Given a prior `D_prior` and a reference `r`, the posterior domain
//! `D_post = D_prior·H` is the closest orthogonal domain (in the rank sense)
//! in which `r` becomes one-sparse: `D_postᴴ r = α e_j`. With `K` linearly
//! independent references the correction becomes `D_prior·H_1⋯H_K`, each
//! reflector leaving the pivots chosen before it untouched, so that
//! `D_postᴴ r_i` is supported on `{j_1, …, j_i}`.
//!
//! Pivot indices are 0-based throughout.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{phase, singular_values, CMatrix, CVector, HouseholderFactor, Side, C64, ZERO};
use crate::priors::PriorTransform;

/// Relative tolerance of the "reference already is a scaled atom" test.
pub const TRIVIAL_TOL: f64 = 1e-10;
/// Relative tolerance of the constraint checks run after construction.
pub const CONSTRAINT_TOL: f64 = 1e-10;
/// Smallest admissible `σ_min / σ_max` of a reference set.
pub const RANK_TOL: f64 = 1e-10;

/// How the pivot of a single reference is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pivot {
    /// Largest `|(D_priorᴴ r)_j|`.
    Auto,
    Index(usize),
}

/// Pivot choice for a reference set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pivots {
    Auto,
    Explicit(Vec<usize>),
}

/// One processed reference: its pivot, its scalar and the reflector, if one
/// was needed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectionStep {
    pub pivot: usize,
    pub alpha: C64,
    pub factor: Option<HouseholderFactor>,
}

impl ReflectionStep {
    pub fn is_trivial(&self) -> bool {
        self.factor.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PosteriorRepr", into = "PosteriorRepr")]
pub struct PosteriorTransform {
    prior: PriorTransform,
    steps: Vec<ReflectionStep>,
}

#[derive(Serialize, Deserialize)]
struct PosteriorRepr {
    prior: PriorTransform,
    steps: Vec<ReflectionStep>,
}

impl TryFrom<PosteriorRepr> for PosteriorTransform {
    type Error = Error;
    fn try_from(r: PosteriorRepr) -> Result<Self> {
        let n = r.prior.dim();
        let mut seen = vec![false; n];
        for (i, s) in r.steps.iter().enumerate() {
            if s.pivot >= n {
                return Err(Error::IndexOutOfRange { index: s.pivot, dim: n });
            }
            if seen[s.pivot] {
                return Err(Error::InvalidParameter(format!("pivot {} repeated", s.pivot)));
            }
            if let Some(f) = &s.factor {
                if f.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: f.dim() });
                }
                if let Some(&bad) = f.support().iter().find(|&&k| seen[k]) {
                    return Err(Error::InvalidParameter(format!("factor {i} touches earlier pivot {bad}")));
                }
            }
            seen[s.pivot] = true;
        }
        Ok(PosteriorTransform { prior: r.prior, steps: r.steps })
    }
}

impl From<PosteriorTransform> for PosteriorRepr {
    fn from(t: PosteriorTransform) -> Self {
        PosteriorRepr { prior: t.prior, steps: t.steps }
    }
}

/// Linearly independent, nonzero references of a common length.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSet {
    refs: Vec<CVector>,
}

impl ReferenceSet {
    pub fn new(refs: Vec<CVector>) -> Result<Self> {
        let first = refs.first().ok_or(Error::Empty)?;
        let n = first.len();
        for r in &refs {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
            if r.is_zero() {
                return Err(Error::ZeroVector);
            }
        }
        if refs.len() > n {
            return Err(Error::InvalidParameter(format!("{} references exceed dimension {n}", refs.len())));
        }
        let s = singular_values(&CMatrix::from_columns(&refs)?);
        let ratio = s[s.len() - 1] / s[0];
        if ratio <= RANK_TOL {
            return Err(Error::DependentReferences(ratio));
        }
        Ok(ReferenceSet { refs })
    }

    pub fn single(r: CVector) -> Result<Self> {
        ReferenceSet::new(vec![r])
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.refs[0].len()
    }

    pub fn refs(&self) -> &[CVector] {
        &self.refs
    }

    pub fn as_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.refs).expect("validated set")
    }
}

fn argmax_excluding(w: &[C64], excluded: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, z) in w.iter().enumerate() {
        if excluded[j] {
            continue;
        }
        let m = z.norm();
        if best.map_or(true, |(_, b)| m > b) {
            best = Some((j, m));
        }
    }
    best.map(|(j, _)| j)
}

/// Index `j ∉ excluded` maximizing `|(D_priorᴴ r)_j|`, smallest index on ties.
pub fn select_pivot(prior: &PriorTransform, r: &CVector, excluded: &[usize]) -> Result<usize> {
    let n = prior.dim();
    if r.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: r.len() });
    }
    if r.is_zero() {
        return Err(Error::ZeroVector);
    }
    let mut mask = vec![false; n];
    for &e in excluded {
        if e >= n {
            return Err(Error::IndexOutOfRange { index: e, dim: n });
        }
        mask[e] = true;
    }
    let w = prior.analyze_slice(r.as_slice());
    argmax_excluding(&w, &mask).ok_or(Error::AllExcluded)
}

/// Builds the reflector sending the masked part of `w` to `α e_j`.
///
/// `w` is the current analysis of the reference, `reserved` flags earlier
/// pivots and `ref_norm` scales the triviality test.
fn reflect_step(w: &[C64], reserved: &[bool], j: usize, alpha_mag: f64, ref_norm: f64) -> Result<ReflectionStep> {
    let residual_sq: f64 = w
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j && !reserved[k])
        .map(|(_, z)| z.norm_sqr())
        .sum();
    let tol = TRIVIAL_TOL * ref_norm;
    if residual_sq <= tol * tol {
        return Ok(ReflectionStep { pivot: j, alpha: w[j], factor: None });
    }
    let alpha = -phase(w[j]) * alpha_mag;
    let n = w.len();
    let support: Vec<usize> = (0..n).filter(|&k| !reserved[k]).collect();
    let mut u = vec![ZERO; n];
    for &k in &support {
        u[k] = w[k];
    }
    u[j] -= alpha;
    let factor = HouseholderFactor::from_direction(&CVector::from_raw(u), support)?;
    Ok(ReflectionStep { pivot: j, alpha, factor: Some(factor) })
}

/// Single-reference posterior transform.
pub fn construct_hot(prior: &PriorTransform, r: &CVector, pivot: Pivot) -> Result<PosteriorTransform> {
    let n = prior.dim();
    if r.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: r.len() });
    }
    if r.is_zero() {
        return Err(Error::ZeroVector);
    }
    let w = prior.analyze_slice(r.as_slice());
    let no_reserved = vec![false; n];
    let j = match pivot {
        Pivot::Auto => argmax_excluding(&w, &no_reserved).ok_or(Error::AllExcluded)?,
        Pivot::Index(j) if j < n => j,
        Pivot::Index(j) => return Err(Error::IndexOutOfRange { index: j, dim: n }),
    };
    let rn = r.norm();
    let step = reflect_step(&w, &no_reserved, j, rn, rn)?;
    let t = PosteriorTransform { prior: prior.clone(), steps: vec![step] };
    t.check_constraints(core::slice::from_ref(r))?;
    Ok(t)
}

/// Multi-reference posterior transform `D_prior·H_1⋯H_K`.
pub fn construct_hot_multi(prior: &PriorTransform, refs: &ReferenceSet, pivots: &Pivots) -> Result<PosteriorTransform> {
    let n = prior.dim();
    if refs.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: refs.dim() });
    }
    let k = refs.len();
    if let Pivots::Explicit(list) = pivots {
        if list.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: list.len() });
        }
        let mut seen = vec![false; n];
        for &j in list {
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, dim: n });
            }
            if seen[j] {
                return Err(Error::InvalidParameter(format!("pivot {j} repeated")));
            }
            seen[j] = true;
        }
    }
    let mut t = PosteriorTransform { prior: prior.clone(), steps: Vec::with_capacity(k) };
    let mut reserved = vec![false; n];
    for (i, r) in refs.refs().iter().enumerate() {
        let w = t.analyze_slice(r.as_slice());
        let j = match pivots {
            Pivots::Auto => argmax_excluding(&w, &reserved).ok_or(Error::AllExcluded)?,
            Pivots::Explicit(list) => list[i],
        };
        let masked_norm = libm::sqrt(
            w.iter().enumerate().filter(|&(q, _)| !reserved[q]).map(|(_, z)| z.norm_sqr()).sum(),
        );
        let step = reflect_step(&w, &reserved, j, masked_norm, r.norm())?;
        reserved[j] = true;
        t.steps.push(step);
    }
    t.check_constraints(refs.refs())?;
    Ok(t)
}

impl PosteriorTransform {
    /// The prior itself, with no correction.
    pub fn trivial(prior: &PriorTransform) -> Self {
        PosteriorTransform { prior: prior.clone(), steps: Vec::new() }
    }

    pub fn prior(&self) -> &PriorTransform {
        &self.prior
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn steps(&self) -> &[ReflectionStep] {
        &self.steps
    }

    /// Reflectors `H_1 … H_K` actually applied (trivial steps skipped).
    pub fn factors(&self) -> impl Iterator<Item = &HouseholderFactor> {
        self.steps.iter().filter_map(|s| s.factor.as_ref())
    }

    pub fn num_factors(&self) -> usize {
        self.factors().count()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.pivot).collect()
    }

    pub fn alphas(&self) -> Vec<C64> {
        self.steps.iter().map(|s| s.alpha).collect()
    }

    pub fn trivial_flags(&self) -> Vec<bool> {
        self.steps.iter().map(ReflectionStep::is_trivial).collect()
    }

    /// True when `D_post = D_prior`.
    pub fn is_identity_correction(&self) -> bool {
        self.num_factors() == 0
    }

    pub(crate) fn analyze_slice(&self, x: &[C64]) -> Vec<C64> {
        let mut w = self.prior.analyze_slice(x);
        for f in self.factors() {
            f.apply_in_place(&mut w);
        }
        w
    }

    /// `D_postᴴ x = H_K⋯H_1 D_priorᴴ x`
    pub fn analyze(&self, x: &CVector) -> Result<CVector> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        Ok(CVector::from_raw(self.analyze_slice(x.as_slice())))
    }

    /// `D_post w = D_prior H_1⋯H_K w`
    pub fn synthesize(&self, w: &CVector) -> Result<CVector> {
        let n = self.dim();
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: w.len() });
        }
        let mut v = w.as_slice().to_vec();
        let factors: Vec<&HouseholderFactor> = self.factors().collect();
        for f in factors.iter().rev() {
            f.apply_in_place(&mut v);
        }
        Ok(CVector::from_raw(self.prior.synthesize_slice(&v)))
    }

    /// `Φ·D_post`, formed as `(Φ·D_prior)·H_1⋯H_K`.
    pub fn sensing_matrix(&self, phi: &CMatrix) -> Result<CMatrix> {
        let mut a = phi.matmul(self.prior.matrix())?;
        self.right_apply_factors(&mut a)?;
        Ok(a)
    }

    /// Right-multiplies an already formed `Φ·D_prior` by the reflectors.
    pub fn right_apply_factors(&self, a: &mut CMatrix) -> Result<()> {
        for f in self.factors() {
            f.apply_matrix_in_place(a, Side::Right)?;
        }
        Ok(())
    }

    /// Dense `D_post`.
    pub fn synthesis_matrix(&self) -> CMatrix {
        let mut d = self.prior.matrix().clone();
        self.right_apply_factors(&mut d).expect("factor dims match prior");
        d
    }

    /// Verifies `D_postᴴ r_i` vanishes outside `{j_1, …, j_i}`.
    pub fn check_constraints(&self, refs: &[CVector]) -> Result<()> {
        let n = self.dim();
        let mut allowed = vec![false; n];
        for (i, r) in refs.iter().enumerate() {
            let step = self.steps.get(i).ok_or(Error::DimensionMismatch { expected: refs.len(), found: self.steps.len() })?;
            allowed[step.pivot] = true;
            let w = self.analyze_slice(r.as_slice());
            let tol = CONSTRAINT_TOL * r.norm();
            if let Some((k, z)) = w.iter().enumerate().find(|&(k, z)| !allowed[k] && z.norm() > tol) {
                return Err(Error::Postcondition(format!("reference {i} leaks {:e} into index {k}", z.norm())));
            }
            if i == 0 && (w[step.pivot] - step.alpha).norm() > tol {
                return Err(Error::Postcondition(format!("reference 0 maps to {} instead of alpha", w[step.pivot])));
            }
        }
        Ok(())
    }
}

pub fn post_analyze(t: &PosteriorTransform, x: &CVector) -> Result<CVector> {
    t.analyze(x)
}

pub fn post_synthesize(t: &PosteriorTransform, w: &CVector) -> Result<CVector> {
    t.synthesize(w)
}

pub fn post_sensing_matrix(t: &PosteriorTransform, phi: &CMatrix) -> Result<CMatrix> {
    t.sensing_matrix(phi)
}

#[cfg(test)]
fn thresholded_support(a: &[C64], rel_tol: f64) -> Vec<usize> {
    let thr = rel_tol * crate::linalg::norm(a);
    a.iter().enumerate().filter(|(_, z)| z.norm() > thr).map(|(i, _)| i).collect()
}
