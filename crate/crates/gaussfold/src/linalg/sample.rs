//! Seeded Gaussian sampling primitives.
//!
//! All randomness in the crate flows through an explicit 64-bit seed and a
//! ChaCha8 stream, so every draw is bit-reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::cov::CovModel;
use crate::linalg::{Matrix, Vector};

/// The crate-wide RNG constructor.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One draw from the matrix-variate Gaussian `N_{a x b}(mean, rowcov, colcov)`,
/// deterministic given the seed.
pub fn sample_matrix_normal(
    mean: &Matrix,
    rowcov: &CovModel,
    colcov: &CovModel,
    seed: u64,
) -> Result<Matrix> {
    let mut rng = rng_from_seed(seed);
    sample_matrix_normal_with(mean, rowcov, colcov, &mut rng)
}

/// Matrix-normal draw from a live RNG stream. The i.i.d. standard normal
/// core `Z` is filled column-major; the draw is `mean + L_row Z L_col^T`.
pub fn sample_matrix_normal_with<R: Rng>(
    mean: &Matrix,
    rowcov: &CovModel,
    colcov: &CovModel,
    rng: &mut R,
) -> Result<Matrix> {
    let (a, b) = (mean.nrows(), mean.ncols());
    if rowcov.dim() != a || colcov.dim() != b {
        return Err(crate::error::Error::Dimension(format!(
            "mean is {a}x{b} but rowcov dim {} and colcov dim {}",
            rowcov.dim(),
            colcov.dim()
        )));
    }
    let z = standard_normal_matrix(a, b, rng);
    let lr = rowcov.cholesky_factor()?;
    let lc = colcov.cholesky_factor()?;
    // L_r Z: transform each column; then (.) L_c^T: transform each row.
    let mut cols: Vec<Vector> = Vec::with_capacity(b);
    for j in 0..b {
        cols.push(lr.apply(&z.column(j).into_owned()));
    }
    let lrz = Matrix::from_columns(&cols);
    let mut out = mean.clone();
    for i in 0..a {
        let row: Vector = lrz.row(i).transpose();
        let t = lc.apply(&row);
        for j in 0..b {
            out[(i, j)] += t[j];
        }
    }
    Ok(out)
}

/// `count` independent rows, each drawn from `N_p(0, cov)`, stacked as a
/// `count x p` matrix.
pub fn sample_mvn_rows<R: Rng>(cov: &CovModel, count: usize, rng: &mut R) -> Result<Matrix> {
    let p = cov.dim();
    let l = cov.cholesky_factor()?;
    let mut out = Matrix::zeros(count, p);
    for i in 0..count {
        let z = standard_normal_vector(p, rng);
        let x = l.apply(&z);
        for j in 0..p {
            out[(i, j)] = x[j];
        }
    }
    Ok(out)
}

pub fn standard_normal_vector<R: Rng>(n: usize, rng: &mut R) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Column-major fill so the draw order is part of the format.
pub fn standard_normal_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_iterator(rows, cols, (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)))
}
