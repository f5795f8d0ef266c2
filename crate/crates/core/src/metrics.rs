//! Domain distances, sparsity measures and recovery quality.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, IncrementalQr, C64};

/// Relative magnitude below which a coefficient counts as zero.
pub const L0_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainComparison {
    pub relative_error: f64,
    pub column_correlation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityProfile {
    pub l0: usize,
    pub l1: f64,
    pub l2: f64,
    /// `(K, γ_K)` pairs in request order.
    pub gamma: Vec<(usize, f64)>,
    pub odd: f64,
}

fn nonzero(a: &CVector) -> Result<()> {
    if a.is_zero() {
        Err(Error::ZeroVector)
    } else {
        Ok(())
    }
}

fn same_len(a: &CVector, b: &CVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    Ok(())
}

/// Relative Frobenius distance of `a` from `b` and mean normalized column
/// correlation.
pub fn domain_compare(a: &CMatrix, b: &CMatrix) -> Result<DomainComparison> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch { expected: b.rows() * b.cols(), found: a.rows() * a.cols() });
    }
    if a.rows() != a.cols() {
        return Err(Error::InvalidParameter(alloc::format!("{}x{} is not square", a.rows(), a.cols())));
    }
    let n = a.cols();
    let mut corr = 0.0;
    for j in 0..n {
        let (na, nb) = (a.column_norm(j), b.column_norm(j));
        if na == 0.0 || nb == 0.0 {
            return Err(Error::ZeroColumn(j));
        }
        let ip: C64 = (0..n).map(|i| a.get(i, j).conj() * b.get(i, j)).sum();
        corr += ip.norm() / (na * nb);
    }
    let diff = a.sub(b)?.frobenius_norm();
    Ok(DomainComparison { relative_error: diff / b.frobenius_norm(), column_correlation: corr / n as f64 })
}

/// Coefficients above `L0_TOL·‖a‖₂` in magnitude.
pub fn l0_norm(a: &CVector) -> usize {
    let thr = L0_TOL * a.norm();
    a.iter().filter(|z| z.norm() > thr).count()
}

/// Fraction of energy held by the `k` largest magnitudes.
pub fn energy_concentration(a: &CVector, k: usize) -> Result<f64> {
    nonzero(a)?;
    if k == 0 || k > a.len() {
        return Err(Error::InvalidParameter(alloc::format!("K = {k} outside 1..={}", a.len())));
    }
    let mut e: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
    e.sort_by(|x, y| y.total_cmp(x));
    let top: f64 = e[..k].iter().sum();
    Ok(top / a.norm_sq())
}

/// `‖a‖₁ / ‖a‖₂`
pub fn numerical_sparsity_odd(a: &CVector) -> Result<f64> {
    nonzero(a)?;
    Ok(a.l1_norm() / a.norm())
}

pub fn sparsity_profile(a: &CVector, ks: &[usize]) -> Result<SparsityProfile> {
    let gamma = ks.iter().map(|&k| Ok((k, energy_concentration(a, k)?))).collect::<Result<Vec<_>>>()?;
    Ok(SparsityProfile { l0: l0_norm(a), l1: a.l1_norm(), l2: a.norm(), gamma, odd: numerical_sparsity_odd(a)? })
}

/// `|rᴴx| / (‖r‖‖x‖)`
pub fn signal_correlation(r: &CVector, x: &CVector) -> Result<f64> {
    same_len(r, x)?;
    nonzero(r)?;
    nonzero(x)?;
    Ok((r.dot(x)?.norm() / (r.norm() * x.norm())).min(1.0))
}

/// Norm ratio of the orthogonal projection of `x` onto the column span of `r`.
pub fn representational_fidelity(r: &CMatrix, x: &CVector) -> Result<f64> {
    if r.rows() != x.len() {
        return Err(Error::DimensionMismatch { expected: r.rows(), found: x.len() });
    }
    nonzero(x)?;
    let s = linalg::singular_values(r);
    if s[s.len() - 1] <= 1e-10 * s[0] {
        return Err(Error::RankDeficient(r.cols()));
    }
    let mut qr = IncrementalQr::new(r.rows());
    for j in 0..r.cols() {
        if qr.push(r.column(j)?.as_slice(), 0.0)?.is_none() {
            return Err(Error::RankDeficient(j));
        }
    }
    let c = qr.project_coefficients(x.as_slice());
    Ok((linalg::norm(&c) / x.norm()).min(1.0))
}

/// `‖est − truth‖² / ‖truth‖²`
pub fn nmse(est: &CVector, truth: &CVector) -> Result<f64> {
    same_len(est, truth)?;
    nonzero(truth)?;
    Ok(est.sub(truth)?.norm_sq() / truth.norm_sq())
}

/// `|estᴴtruth| / (‖est‖‖truth‖)`, zero for a zero estimate.
pub fn corr(est: &CVector, truth: &CVector) -> Result<f64> {
    same_len(est, truth)?;
    nonzero(truth)?;
    if est.is_zero() {
        return Ok(0.0);
    }
    signal_correlation(est, truth)
}

/// Time-averaged NMSE and correlation.
pub fn temporal_metrics(ests: &[CVector], truths: &[CVector]) -> Result<(f64, f64)> {
    if ests.len() != truths.len() {
        return Err(Error::DimensionMismatch { expected: truths.len(), found: ests.len() });
    }
    if truths.is_empty() {
        return Err(Error::Empty);
    }
    let (mut e, mut c) = (0.0, 0.0);
    for (x, t) in ests.iter().zip(truths) {
        e += nmse(x, t)?;
        c += corr(x, t)?;
    }
    let t = truths.len() as f64;
    Ok((e / t, c / t))
}

/// Relative error bound `2√K/√N`.
pub fn relative_error_bound(n: usize, k: usize) -> f64 {
    2.0 * libm::sqrt(k as f64) / libm::sqrt(n as f64)
}

/// Column correlation bound `1 − 2K/N`.
pub fn column_correlation_bound(n: usize, k: usize) -> f64 {
    1.0 - 2.0 * k as f64 / n as f64
}

/// Whether `rho` lies in the range that guarantees the posterior ℓ1 norm
/// does not exceed the prior one for `k` references.
pub fn l1_condition_holds(rho: f64, odd: f64, n: usize, k: usize) -> bool {
    let (nf, kf) = (n as f64, k as f64);
    let root = libm::sqrt(((nf - kf) * (nf - odd * odd)).max(0.0));
    let sk = libm::sqrt(kf);
    if rho >= (sk * odd + root) / nf {
        return true;
    }
    odd >= libm::sqrt(nf - kf) && rho <= (sk * odd - root) / nf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hot::{construct_hot, construct_hot_multi, Pivot, Pivots, ReferenceSet};
    use crate::priors::PriorTransform;
    use crate::testutil::*;
    use alloc::vec;
    use core::f64::consts::FRAC_1_SQRT_2 as S;

    fn v(x: &[f64]) -> CVector {
        CVector::from_real(x).unwrap()
    }

    #[test]
    fn domain_compare_examples() {
        let p = PriorTransform::dft(16).unwrap();
        let id = domain_compare(p.matrix(), p.matrix()).unwrap();
        assert_eq!(id.relative_error, 0.0);
        assert!((id.column_correlation - 1.0).abs() < 1e-12);

        let mut rng = test_rng(1);
        let t = construct_hot(&p, &random_vector(&mut rng, 16), Pivot::Auto).unwrap();
        let d = domain_compare(&t.synthesis_matrix(), p.matrix()).unwrap();
        assert!((d.relative_error - 0.5).abs() < 1e-10);
        assert!(d.column_correlation >= 1.0 - 2.0 / 16.0 - 1e-10);

        let refs = ReferenceSet::new(vec![random_vector(&mut rng, 16), random_vector(&mut rng, 16)]).unwrap();
        let t2 = construct_hot_multi(&p, &refs, &Pivots::Auto).unwrap();
        let d2 = domain_compare(&t2.synthesis_matrix(), p.matrix()).unwrap();
        assert!(d2.relative_error <= 2.0 * 2f64.sqrt() / 4.0 + 1e-10);
        assert!(d2.column_correlation >= 1.0 - 4.0 / 16.0 - 1e-10);
    }

    #[test]
    fn domain_compare_errors() {
        let a = CMatrix::identity(3).unwrap();
        assert!(domain_compare(&a, &CMatrix::identity(2).unwrap()).is_err());
        assert_eq!(domain_compare(&a, &CMatrix::zeros(3, 3).unwrap()), Err(Error::ZeroColumn(0)));
        let rect = CMatrix::zeros(2, 3).unwrap();
        assert!(domain_compare(&rect, &rect).is_err());
    }

    #[test]
    fn energy_concentration_examples() {
        assert_eq!(energy_concentration(&CVector::basis(5, 0).unwrap(), 1).unwrap(), 1.0);
        let ones = v(&[1.0; 7]);
        assert!((energy_concentration(&ones, 1).unwrap() - 1.0 / 7.0).abs() < 1e-15);
        assert!((energy_concentration(&v(&[3.0, 4.0, 0.0, 0.0]), 1).unwrap() - 16.0 / 25.0).abs() < 1e-15);
        assert_eq!(energy_concentration(&CVector::zeros(3).unwrap(), 1), Err(Error::ZeroVector));
        assert!(energy_concentration(&ones, 0).is_err());
        assert!(energy_concentration(&ones, 8).is_err());
    }

    #[test]
    fn odd_examples() {
        assert_eq!(numerical_sparsity_odd(&CVector::basis(4, 2).unwrap()).unwrap(), 1.0);
        assert!((numerical_sparsity_odd(&v(&[1.0; 9])).unwrap() - 3.0).abs() < 1e-14);
        assert!((numerical_sparsity_odd(&v(&[1.0, 1.0, 0.0, 0.0])).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(numerical_sparsity_odd(&CVector::zeros(2).unwrap()).is_err());
    }

    #[test]
    fn correlation_examples() {
        let x = v(&[1.0, 1.0]);
        assert!((signal_correlation(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(signal_correlation(&v(&[1.0, 0.0]), &v(&[0.0, 2.0])).unwrap(), 0.0);
        assert!((signal_correlation(&v(&[1.0, 0.0]), &x).unwrap() - S).abs() < 1e-15);
        assert!(signal_correlation(&CVector::zeros(2).unwrap(), &x).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let r = CMatrix::from_real(2, 1, &[1.0, 0.0]).unwrap();
        assert!((representational_fidelity(&r, &v(&[1.0, 1.0])).unwrap() - S).abs() < 1e-15);
        assert!((representational_fidelity(&r, &v(&[3.0, 0.0])).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(representational_fidelity(&r, &v(&[0.0, 3.0])).unwrap(), 0.0);
        let dep = CMatrix::from_real(2, 2, &[1.0, 2.0, 1.0, 2.0]).unwrap();
        assert!(matches!(representational_fidelity(&dep, &v(&[1.0, 1.0])), Err(Error::RankDeficient(_))));
        assert!(representational_fidelity(&r, &CVector::zeros(2).unwrap()).is_err());
    }

    #[test]
    fn fidelity_matches_normal_equations() {
        let mut rng = test_rng(8);
        let r = random_matrix(&mut rng, 6, 2);
        let x = random_vector(&mut rng, 6);
        // explicit (RᴴR)⁻¹ for a 2×2 Gram matrix
        let g = naive_matmul(&r.adjoint(), &r);
        let det = g.get(0, 0) * g.get(1, 1) - g.get(0, 1) * g.get(1, 0);
        let rx = naive_matvec(&r.adjoint(), &x);
        let c0 = (g.get(1, 1) * rx[0] - g.get(0, 1) * rx[1]) / det;
        let c1 = (g.get(0, 0) * rx[1] - g.get(1, 0) * rx[0]) / det;
        let proj: Vec<C64> = (0..6).map(|i| r.get(i, 0) * c0 + r.get(i, 1) * c1).collect();
        let expected = linalg::norm(&proj) / x.norm();
        assert!((representational_fidelity(&r, &x).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn recovery_examples() {
        let t = v(&[1.0, -2.0, 0.5]);
        assert_eq!(nmse(&t, &t).unwrap(), 0.0);
        assert!((corr(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        let z = CVector::zeros(3).unwrap();
        assert_eq!(nmse(&z, &t).unwrap(), 1.0);
        assert_eq!(corr(&z, &t).unwrap(), 0.0);
        let d = t.scale(C64::new(2.0, 0.0));
        assert!((nmse(&d, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!((corr(&d, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmse(&t, &z).is_err());
    }

    #[test]
    fn temporal_examples() {
        let a = v(&[1.0, 0.0]);
        let b = v(&[0.0, 1.0]);
        assert_eq!(temporal_metrics(&[a.clone(), b.clone()], &[a.clone(), b.clone()]).unwrap().0, 0.0);
        let e1 = v(&[1.0 + 0.5f64.sqrt(), 0.0]);
        let e2 = v(&[0.0, 1.0 + 0.1f64.sqrt()]);
        let (tn, tc) = temporal_metrics(&[e1.clone(), e2], &[a.clone(), b]).unwrap();
        assert!((tn - 0.3).abs() < 1e-14);
        assert!((tc - 1.0).abs() < 1e-14);
        let (n1, c1) = temporal_metrics(&[e1.clone()], &[a.clone()]).unwrap();
        assert_eq!(n1, nmse(&e1, &a).unwrap());
        assert_eq!(c1, corr(&e1, &a).unwrap());
        assert!(temporal_metrics(&[e1], &[]).is_err());
    }

    #[test]
    fn profile_and_thresholds() {
        let a = v(&[3.0, 4.0, 1e-12, 0.0]);
        let p = sparsity_profile(&a, &[1, 2, 4]).unwrap();
        assert_eq!(p.l0, 2);
        assert_eq!(p.gamma[2], (4, 1.0));
        assert!(p.gamma[0].1 <= p.gamma[1].1);
        assert!(l1_condition_holds(1.0, 1.0, 8, 1));
        assert!(!l1_condition_holds(0.5, 1.0, 8, 1));
        // odd = √N: every correlation qualifies
        let n = 16;
        for rho in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert!(l1_condition_holds(rho, (n as f64).sqrt(), n, 1));
        }
    }
}
