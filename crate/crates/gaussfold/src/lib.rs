//! Decompose one or more multivariate Gaussian observations (or
//! Gaussian-process realizations) into independent or dependent folds,
//! evaluate the exact marginal and conditional laws of those folds, allocate
//! Fisher information across them, and run selective-inference and
//! model-validation pipelines on top.
//!
//! The central object is a single orthogonal-premultiplication scheme:
//! augment the data matrix with rows of auxiliary Gaussian noise, premultiply
//! by an orthogonal matrix `Q`, and partition the resulting rows into folds.
//! Specific choices of `Q`, the augmentation count, and the auxiliary
//! covariance recover sample splitting, K-fold thinning, data fission, and
//! information-preserving rotations, and extend to Gaussian processes on
//! finite index sets.
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the `gaussfold` binary for the batch front-end.

// `!(x > 0.0)` is used deliberately to reject NaN parameters along with
// non-positive ones
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod casestudy;
pub mod config;
pub mod decompose;
pub mod error;
pub mod fisher;
pub mod gp;
pub mod inference;
pub mod laws;
pub mod linalg;
pub mod runner;

pub use error::{Error, Result};
pub use linalg::{CovModel, EigenPair, Matrix, Vector};

/// Crate version embedded into every output artifact for provenance.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
