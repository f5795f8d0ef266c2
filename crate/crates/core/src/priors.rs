//! Classical orthogonal transforms used as the starting domain.
//!
//! Every prior is stored as its dense synthesis matrix `D` (columns are the
//! atoms, `x = D w`). Analysis is `w = Dᴴ x`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// Unitarity tolerance for every prior, `‖DᴴD − I‖_max`.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKind {
    Dft,
    /// Orthonormal DCT-II.
    Dct2,
    /// Orthonormal Haar wavelet with the given number of levels.
    Haar { levels: u32 },
    Identity,
    Custom { matrix: CMatrix },
}

#[derive(Clone, Debug)]
pub struct PriorTransform {
    kind: PriorKind,
    synthesis: Arc<CMatrix>,
}

impl PartialEq for PriorTransform {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.dim() == other.dim()
    }
}

/// Serialized form: the kind plus the dimension; the matrix is rebuilt.
#[derive(Serialize, Deserialize)]
struct PriorRepr {
    #[serde(flatten)]
    kind: PriorKind,
    dim: usize,
}

impl Serialize for PriorTransform {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        PriorRepr { kind: self.kind.clone(), dim: self.dim() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PriorTransform {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let repr = PriorRepr::deserialize(d)?;
        PriorTransform::new(repr.kind, repr.dim).map_err(serde::de::Error::custom)
    }
}

/// Largest number of Haar levels supported at dimension `n`.
pub fn max_haar_levels(n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        n.trailing_zeros()
    }
}

/// In-place orthonormal Haar analysis: approximation coefficients first.
pub fn haar_forward(x: &mut [f64], levels: u32) {
    let mut len = x.len();
    let mut tmp = vec![0.0; len];
    let s = core::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..levels {
        let half = len / 2;
        for i in 0..half {
            let (a, b) = (x[2 * i], x[2 * i + 1]);
            tmp[i] = (a + b) * s;
            tmp[half + i] = (a - b) * s;
        }
        x[..len].copy_from_slice(&tmp[..len]);
        len = half;
    }
}

fn dft_matrix(n: usize) -> Result<CMatrix> {
    let scale = 1.0 / libm::sqrt(n as f64);
    CMatrix::from_fn(n, n, |k, m| {
        let theta = -2.0 * PI * (((k * m) % n) as f64) / n as f64;
        C64::new(libm::cos(theta) * scale, libm::sin(theta) * scale)
    })
}

fn dct2_matrix(n: usize) -> Result<CMatrix> {
    let s0 = libm::sqrt(1.0 / n as f64);
    let sk = libm::sqrt(2.0 / n as f64);
    // row = sample index, column = frequency index
    CMatrix::from_fn(n, n, |t, k| {
        let arg = (((2 * t + 1) * k) % (4 * n)) as f64 * PI / (2 * n) as f64;
        let s = if k == 0 { s0 } else { sk };
        C64::new(s * libm::cos(arg), 0.0)
    })
}

fn haar_matrix(n: usize, levels: u32) -> Result<CMatrix> {
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    let mut e = vec![0.0; n];
    for t in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[t] = 1.0;
        haar_forward(&mut e, levels);
        // row t of D is the analysis of e_t
        for (k, &v) in e.iter().enumerate() {
            data[t * n + k] = C64::new(v, 0.0);
        }
    }
    CMatrix::new(n, n, data)
}

impl PriorTransform {
    pub fn new(kind: PriorKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let synthesis = match &kind {
            PriorKind::Dft => dft_matrix(n)?,
            PriorKind::Dct2 => dct2_matrix(n)?,
            PriorKind::Identity => CMatrix::identity(n)?,
            PriorKind::Haar { levels } => {
                let levels = *levels;
                if levels == 0 {
                    return Err(invalid("Haar levels must be positive"));
                }
                if levels > max_haar_levels(n) {
                    return Err(invalid(format!("Haar with {levels} levels needs N divisible by 2^{levels}, got N = {n}")));
                }
                haar_matrix(n, levels)?
            }
            PriorKind::Custom { matrix } => {
                if matrix.rows() != n || matrix.cols() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: matrix.rows().max(matrix.cols()) });
                }
                let dev = matrix.unitarity_error();
                if dev > UNITARY_TOL {
                    return Err(Error::NotUnitary(dev));
                }
                matrix.clone()
            }
        };
        Ok(PriorTransform { kind, synthesis: Arc::new(synthesis) })
    }

    pub fn dft(n: usize) -> Result<Self> {
        PriorTransform::new(PriorKind::Dft, n)
    }

    pub fn dct2(n: usize) -> Result<Self> {
        PriorTransform::new(PriorKind::Dct2, n)
    }

    pub fn identity(n: usize) -> Result<Self> {
        PriorTransform::new(PriorKind::Identity, n)
    }

    /// Haar with `levels`, or as many levels as `n` allows when `None`.
    pub fn haar(n: usize, levels: Option<u32>) -> Result<Self> {
        let levels = levels.unwrap_or_else(|| max_haar_levels(n));
        PriorTransform::new(PriorKind::Haar { levels }, n)
    }

    pub fn custom(matrix: CMatrix) -> Result<Self> {
        let n = matrix.rows();
        PriorTransform::new(PriorKind::Custom { matrix }, n)
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.synthesis.rows()
    }

    pub fn is_real(&self) -> bool {
        match &self.kind {
            PriorKind::Dft => false,
            PriorKind::Custom { matrix } => matrix.is_real(),
            _ => true,
        }
    }

    /// Dense synthesis matrix `D`.
    pub fn matrix(&self) -> &CMatrix {
        &self.synthesis
    }

    /// Atom `j` (column `j` of `D`).
    pub fn atom(&self, j: usize) -> Result<CVector> {
        self.synthesis.column(j)
    }

    /// `x = D w`
    pub fn synthesize(&self, w: &CVector) -> Result<CVector> {
        self.synthesis.apply(w)
    }

    /// `w = Dᴴ x`
    pub fn analyze(&self, x: &CVector) -> Result<CVector> {
        self.synthesis.adjoint_apply(x)
    }

    pub(crate) fn analyze_slice(&self, x: &[C64]) -> Vec<C64> {
        self.synthesis.adjoint_apply_slice(x)
    }

    pub(crate) fn synthesize_slice(&self, w: &[C64]) -> Vec<C64> {
        self.synthesis.apply_slice(w)
    }
}

pub fn prior_synthesize(p: &PriorTransform, w: &CVector) -> Result<CVector> {
    p.synthesize(w)
}

pub fn prior_analyze(p: &PriorTransform, x: &CVector) -> Result<CVector> {
    p.analyze(x)
}

pub fn prior_matrix(p: &PriorTransform) -> CMatrix {
    p.matrix().clone()
}
