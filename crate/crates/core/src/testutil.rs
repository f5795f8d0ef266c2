//! Random fixtures and naive oracles shared by the unit tests.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::linalg::{CMatrix, CVector, HouseholderFactor, C64, ZERO};

pub fn test_rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn gauss<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    CVector::new((0..n).map(|_| gauss(rng)).collect()).unwrap()
}

pub fn random_real_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    CVector::new((0..n).map(|_| C64::new(rng.sample(StandardNormal), 0.0)).collect()).unwrap()
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gauss(rng)).unwrap()
}

pub fn random_factor<R: Rng>(rng: &mut R, n: usize, support: &[usize]) -> HouseholderFactor {
    let u = random_vector(rng, n);
    HouseholderFactor::from_direction(&u, support.to_vec()).unwrap()
}

pub fn naive_matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        let mut s = ZERO;
        for k in 0..a.cols() {
            s += a.get(i, k) * b.get(k, j);
        }
        s
    })
    .unwrap()
}

pub fn naive_matvec(a: &CMatrix, x: &CVector) -> Vec<C64> {
    (0..a.rows())
        .map(|i| (0..a.cols()).fold(ZERO, |s, k| s + a.get(i, k) * x[k]))
        .collect()
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}
