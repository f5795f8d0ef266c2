//! Dense complex vectors and matrices, Householder reflectors and the few
//! factorizations the rest of the crate needs.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

fn check_finite(data: &[C64]) -> Result<()> {
    match data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// `aᴴb`
pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

pub(crate) fn norm_sq(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

/// `z / |z|`, or one for `z == 0`. Real inputs give exactly real output.
pub(crate) fn phase(z: C64) -> C64 {
    let m = z.norm();
    if m == 0.0 {
        ONE
    } else {
        z / m
    }
}

/// Dense complex vector with at least one entry, all finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct CVector(Vec<C64>);

impl TryFrom<Vec<C64>> for CVector {
    type Error = Error;
    fn try_from(v: Vec<C64>) -> Result<Self> {
        CVector::new(v)
    }
}

impl From<CVector> for Vec<C64> {
    fn from(v: CVector) -> Self {
        v.0
    }
}

impl CVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty);
        }
        check_finite(&entries)?;
        Ok(CVector(entries))
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        CVector::new(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Callers guarantee a nonempty, finite buffer.
    pub(crate) fn from_raw(entries: Vec<C64>) -> Self {
        debug_assert!(!entries.is_empty());
        CVector(entries)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        CVector::new(vec![ZERO; n])
    }

    /// Standard basis vector `e_j` (0-based).
    pub fn basis(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, dim: n });
        }
        let mut v = vec![ZERO; n];
        v[j] = ONE;
        Ok(CVector(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// `selfᴴ other`
    pub fn dot(&self, other: &CVector) -> Result<C64> {
        same_len(self.len(), other.len())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn scale(&self, c: C64) -> CVector {
        CVector(self.0.iter().map(|z| z * c).collect())
    }

    pub fn sub(&self, other: &CVector) -> Result<CVector> {
        same_len(self.len(), other.len())?;
        Ok(CVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn add(&self, other: &CVector) -> Result<CVector> {
        same_len(self.len(), other.len())?;
        Ok(CVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.re).collect()
    }

    /// Real parts, provided every imaginary part is at most `tol` in magnitude.
    pub fn to_real(&self, tol: f64) -> Option<Vec<f64>> {
        if self.max_imag_abs() <= tol {
            Some(self.real_parts())
        } else {
            None
        }
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

fn same_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl TryFrom<MatrixRepr> for CMatrix {
    type Error = Error;
    fn try_from(m: MatrixRepr) -> Result<Self> {
        CMatrix::new(m.rows, m.cols, m.data)
    }
}

impl From<CMatrix> for MatrixRepr {
    fn from(m: CMatrix) -> Self {
        MatrixRepr { rows: m.rows, cols: m.cols, data: m.data }
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        same_len(rows * cols, data.len())?;
        check_finite(&data)?;
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        CMatrix::new(rows, cols, vec![ZERO; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = CMatrix::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix::new(rows, cols, data)
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        CMatrix::new(rows, cols, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[CVector]) -> Result<Self> {
        let first = columns.first().ok_or(Error::Empty)?;
        let rows = first.len();
        for c in columns {
            same_len(rows, c.len())?;
        }
        CMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Result<CVector> {
        if j >= self.cols {
            return Err(Error::IndexOutOfRange { index: j, dim: self.cols });
        }
        Ok(CVector((0..self.rows).map(|i| self.get(i, j)).collect()))
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        libm::sqrt((0..self.rows).map(|i| self.get(i, j).norm_sqr()).sum())
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).conj());
            }
        }
        CMatrix::from_raw(self.cols, self.rows, data)
    }

    /// `A x`
    pub fn apply(&self, x: &CVector) -> Result<CVector> {
        same_len(self.cols, x.len())?;
        Ok(CVector(self.apply_slice(x.as_slice())))
    }

    pub(crate) fn apply_slice(&self, x: &[C64]) -> Vec<C64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(ZERO, |acc, (a, b)| acc + a * b))
            .collect()
    }

    /// `Aᴴ x`
    pub fn adjoint_apply(&self, x: &CVector) -> Result<CVector> {
        same_len(self.rows, x.len())?;
        Ok(CVector(self.adjoint_apply_slice(x.as_slice())))
    }

    pub(crate) fn adjoint_apply_slice(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.cols];
        for (i, xi) in x.iter().enumerate() {
            if xi.re == 0.0 && xi.im == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        same_len(self.cols, other.rows)?;
        let mut data = vec![ZERO; self.rows * other.cols];
        for i in 0..self.rows {
            let out = &mut data[i * other.cols..(i + 1) * other.cols];
            for (k, a) in self.row(i).iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (o, b) in out.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(CMatrix::from_raw(self.rows, other.cols, data))
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        same_len(self.rows, other.rows)?;
        same_len(self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(CMatrix::from_raw(self.rows, self.cols, data))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_imag_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// `‖AᴴA − I‖_max`
    pub fn unitarity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for p in 0..self.cols {
            for q in p..self.cols {
                let g: C64 = (0..self.rows).fold(ZERO, |acc, i| acc + self.get(i, p).conj() * self.get(i, q));
                let target = if p == q { ONE } else { ZERO };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }
}

/// Which side a reflector multiplies a matrix from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Unit reflector `v` describing `H = I − 2vvᴴ`, nonzero only on `support`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorRepr", into = "FactorRepr")]
pub struct HouseholderFactor {
    v: CVector,
    support: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct FactorRepr {
    v: CVector,
    support: Vec<usize>,
}

impl TryFrom<FactorRepr> for HouseholderFactor {
    type Error = Error;
    fn try_from(r: FactorRepr) -> Result<Self> {
        HouseholderFactor::new(r.v, r.support)
    }
}

impl From<HouseholderFactor> for FactorRepr {
    fn from(h: HouseholderFactor) -> Self {
        FactorRepr { v: h.v, support: h.support }
    }
}

const UNIT_TOL: f64 = 1e-12;

impl HouseholderFactor {
    /// Validates `‖v‖ = 1` and that `v` vanishes off `support`.
    pub fn new(v: CVector, mut support: Vec<usize>) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        let n = v.len();
        if let Some(&bad) = support.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, dim: n });
        }
        let nv = v.norm();
        if (nv - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnitNorm(nv));
        }
        let mut inside = vec![false; n];
        for &i in &support {
            inside[i] = true;
        }
        if let Some(i) = (0..n).find(|&i| !inside[i] && v[i] != ZERO) {
            return Err(Error::OutsideSupport(i));
        }
        Ok(HouseholderFactor { v, support })
    }

    /// Normalizes `u` after zeroing it off `support`.
    pub fn from_direction(u: &CVector, support: Vec<usize>) -> Result<Self> {
        let n = u.len();
        let mut masked = vec![ZERO; n];
        for &i in &support {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, dim: n });
            }
            masked[i] = u[i];
        }
        let nu = norm(&masked);
        if nu == 0.0 {
            return Err(Error::ZeroVector);
        }
        for z in masked.iter_mut() {
            *z /= nu;
        }
        HouseholderFactor::new(CVector(masked), support)
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn vector(&self) -> &CVector {
        &self.v
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub(crate) fn apply_in_place(&self, a: &mut [C64]) {
        let v = self.v.as_slice();
        let s = self.support.iter().fold(ZERO, |acc, &i| acc + v[i].conj() * a[i]) * 2.0;
        for &i in &self.support {
            a[i] -= v[i] * s;
        }
    }

    /// `a − 2(vᴴa)v` without forming `H`.
    pub fn apply(&self, a: &CVector) -> Result<CVector> {
        same_len(self.dim(), a.len())?;
        let mut out = a.0.clone();
        self.apply_in_place(&mut out);
        Ok(CVector(out))
    }

    /// `H·A` or `A·H`.
    pub fn apply_matrix(&self, a: &CMatrix, side: Side) -> Result<CMatrix> {
        let mut out = a.clone();
        self.apply_matrix_in_place(&mut out, side)?;
        Ok(out)
    }

    pub(crate) fn apply_matrix_in_place(&self, a: &mut CMatrix, side: Side) -> Result<()> {
        let v = self.v.as_slice();
        match side {
            Side::Left => {
                same_len(self.dim(), a.rows)?;
                // t = vᴴA, then A ← A − 2 v t
                let mut t = vec![ZERO; a.cols];
                for &k in &self.support {
                    let vk = v[k].conj();
                    for (tj, akj) in t.iter_mut().zip(a.row(k)) {
                        *tj += vk * akj;
                    }
                }
                let cols = a.cols;
                for &k in &self.support {
                    let scale = v[k] * 2.0;
                    for (akj, tj) in a.data[k * cols..(k + 1) * cols].iter_mut().zip(&t) {
                        *akj -= scale * tj;
                    }
                }
            }
            Side::Right => {
                same_len(self.dim(), a.cols)?;
                let cols = a.cols;
                for i in 0..a.rows {
                    let row = &mut a.data[i * cols..(i + 1) * cols];
                    let s = self.support.iter().fold(ZERO, |acc, &k| acc + row[k] * v[k]) * 2.0;
                    for &k in &self.support {
                        row[k] -= s * v[k].conj();
                    }
                }
            }
        }
        Ok(())
    }

    /// Dense `I − 2vvᴴ`; intended for tests and diagnostics.
    pub fn to_matrix(&self) -> CMatrix {
        let n = self.dim();
        let v = self.v.as_slice();
        let mut m = CMatrix::identity(n).expect("n >= 1");
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] -= v[i] * v[j].conj() * 2.0;
            }
        }
        m
    }
}

/// Conjugate-transpose product `Aᴴx`.
pub fn adjoint_apply(a: &CMatrix, x: &CVector) -> Result<CVector> {
    a.adjoint_apply(x)
}

/// `a − 2(vᴴa)v` for the factor `h`.
pub fn householder_apply(h: &HouseholderFactor, a: &CVector) -> Result<CVector> {
    h.apply(a)
}

pub fn householder_apply_matrix(h: &HouseholderFactor, a: &CMatrix, side: Side) -> Result<CMatrix> {
    h.apply_matrix(a, side)
}

/// Column-by-column orthonormalization (modified Gram–Schmidt with one
/// reorthogonalization pass), keeping the triangular factor for least squares.
#[derive(Clone, Debug)]
pub struct IncrementalQr {
    dim: usize,
    q: Vec<Vec<C64>>,
    // r[k] holds column k of R (length k+1).
    r: Vec<Vec<C64>>,
}

impl IncrementalQr {
    pub fn new(dim: usize) -> Self {
        IncrementalQr { dim, q: Vec::new(), r: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Appends a column. Returns the new diagonal entry of `R`, or `None`
    /// (leaving the factorization unchanged) when the column is numerically
    /// inside the current span relative to `rel_tol`.
    pub fn push(&mut self, column: &[C64], rel_tol: f64) -> Result<Option<f64>> {
        same_len(self.dim, column.len())?;
        let original = norm(column);
        let mut u = column.to_vec();
        let mut coeffs = vec![ZERO; self.q.len()];
        for _ in 0..2 {
            for (k, qk) in self.q.iter().enumerate() {
                let c = dot(qk, &u);
                coeffs[k] += c;
                for (ui, qi) in u.iter_mut().zip(qk) {
                    *ui -= qi * c;
                }
            }
        }
        let diag = norm(&u);
        if original == 0.0 || diag <= rel_tol * original {
            return Ok(None);
        }
        for ui in u.iter_mut() {
            *ui /= diag;
        }
        coeffs.push(C64::new(diag, 0.0));
        self.q.push(u);
        self.r.push(coeffs);
        Ok(Some(diag))
    }

    /// `Qᴴ y`
    pub fn project_coefficients(&self, y: &[C64]) -> Vec<C64> {
        self.q.iter().map(|qk| dot(qk, y)).collect()
    }

    /// `y − QQᴴy`
    pub fn residual(&self, y: &[C64]) -> Vec<C64> {
        let mut r = y.to_vec();
        for _ in 0..2 {
            for qk in &self.q {
                let c = dot(qk, &r);
                for (ri, qi) in r.iter_mut().zip(qk) {
                    *ri -= qi * c;
                }
            }
        }
        r
    }

    /// Least-squares coefficients `R⁻¹Qᴴy` in insertion order.
    pub fn solve(&self, y: &[C64]) -> Vec<C64> {
        let b = self.project_coefficients(y);
        let k = b.len();
        let mut x = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut s = b[i];
            for j in i + 1..k {
                s -= self.r[j][i] * x[j];
            }
            x[i] = s / self.r[i][i];
        }
        x
    }
}

/// Singular values in descending order by one-sided (Hestenes) Jacobi.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let m = if a.rows >= a.cols { a.clone() } else { a.adjoint() };
    let (rows, cols) = (m.rows, m.cols);
    let mut c: Vec<Vec<C64>> = (0..cols).map(|j| (0..rows).map(|i| m.get(i, j)).collect()).collect();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = norm_sq(&c[p]);
                let beta = norm_sq(&c[q]);
                let g = dot(&c[p], &c[q]);
                let gm = g.norm();
                if gm == 0.0 || gm <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                // rotate q's phase so the inner product becomes real
                let ph = g / gm;
                let zeta = (beta - alpha) / (2.0 * gm);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let cs = 1.0 / libm::sqrt(1.0 + t * t);
                let sn = cs * t;
                let (left, right) = c.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let yq = *y * ph.conj();
                    let xp = *x;
                    *x = xp * cs - yq * sn;
                    *y = xp * sn + yq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c.iter().map(|col| norm(col)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    s
}
