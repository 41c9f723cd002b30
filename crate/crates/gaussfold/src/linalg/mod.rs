//! Dense linear algebra, structured covariance models, orthogonal-matrix
//! construction, and seeded Gaussian sampling.

pub mod cov;
pub mod csvio;
pub mod orth;
pub mod sample;

/// Column vector of `f64`.
pub type Vector = nalgebra::DVector<f64>;
/// Dense `f64` matrix.
pub type Matrix = nalgebra::DMatrix<f64>;

pub use cov::{CholFactor, CovModel, EigenPair, SpectralBasis};
pub use csvio::{read_matrix_csv, write_matrix_csv};
pub use orth::{haar_orthogonal, orth_complete, orthogonality_defect, permutation_matrix, random_permutation};
pub use sample::{rng_from_seed, sample_matrix_normal, sample_matrix_normal_with, sample_mvn_rows};

/// Reshape a length `a*b` vector into an `a x b` matrix in column order.
pub fn mat_of_vec(x: &Vector, a: usize, b: usize) -> crate::error::Result<Matrix> {
    if x.len() != a * b {
        return Err(crate::error::Error::Dimension(format!(
            "cannot reshape length {} vector into {a}x{b}",
            x.len()
        )));
    }
    Ok(Matrix::from_column_slice(a, b, x.as_slice()))
}

/// Stack the columns of `m` into a single vector.
pub fn vec_of_mat(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}
