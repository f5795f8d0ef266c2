//! Householder-corrected sparse transforms for compressed sensing.
//!
//! A classical orthogonal prior (DFT, DCT-II, Haar, identity or a custom
//! unitary matrix) is refined by a short chain of Householder reflections so
//! that chosen reference signals become maximally sparse. The crate carries
//! the transforms, the diagnostic metrics, the OMP/LASSO/BP recovery
//! algorithms and the synthetic data generators; it needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod datagen;
pub mod error;
pub mod hot;
pub mod linalg;
pub mod metrics;
pub mod priors;
pub mod solvers;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use hot::{construct_hot, construct_hot_multi, select_pivot, Pivot, Pivots, PosteriorTransform, ReferenceSet};
pub use linalg::{CMatrix, CVector, HouseholderFactor, Side, C64};
pub use priors::{PriorKind, PriorTransform};
