//! Structured covariance models and their eigendecompositions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// A positive definite covariance matrix in one of several structured forms.
///
/// Dense and diagonal forms store their entries; `Isotropic` is `variance * I`;
/// `Ar1` is the first-order autoregressive correlation matrix with entries
/// `rho^|i-j|`; `Kronecker(a, b)` is the Kronecker product `a (x) b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CovModel {
    Dense { matrix: Matrix },
    Diagonal { variances: Vector },
    Isotropic { variance: f64, dim: usize },
    Ar1 { rho: f64, dim: usize },
    Kronecker { left: Box<CovModel>, right: Box<CovModel> },
}

impl CovModel {
    /// Dense model from a symmetric matrix. Symmetry and finiteness are
    /// checked here; positive definiteness is checked where a factorization
    /// is actually needed.
    pub fn dense(matrix: Matrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("covariance has non-finite entries".into()));
        }
        let asym = (&matrix - matrix.transpose()).abs().max();
        let scale = matrix.abs().max().max(1.0);
        if asym > 1e-10 * scale {
            return Err(Error::InvalidParameter(format!(
                "covariance is not symmetric (max asymmetry {asym:.3e})"
            )));
        }
        Ok(CovModel::Dense { matrix })
    }

    pub fn diagonal(variances: Vector) -> Result<Self> {
        if variances.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("diagonal variances must be positive".into()));
        }
        Ok(CovModel::Diagonal { variances })
    }

    pub fn isotropic(variance: f64, dim: usize) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "isotropic variance must be positive, got {variance}"
            )));
        }
        Ok(CovModel::Isotropic { variance, dim })
    }

    pub fn ar1(rho: f64, dim: usize) -> Result<Self> {
        if !(-1.0 < rho && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "AR(1) parameter must lie in (-1, 1), got {rho}"
            )));
        }
        Ok(CovModel::Ar1 { rho, dim })
    }

    pub fn kronecker(left: CovModel, right: CovModel) -> Self {
        CovModel::Kronecker { left: Box::new(left), right: Box::new(right) }
    }

    pub fn identity(dim: usize) -> Self {
        CovModel::Isotropic { variance: 1.0, dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            CovModel::Dense { matrix } => matrix.nrows(),
            CovModel::Diagonal { variances } => variances.len(),
            CovModel::Isotropic { dim, .. } => *dim,
            CovModel::Ar1 { dim, .. } => *dim,
            CovModel::Kronecker { left, right } => left.dim() * right.dim(),
        }
    }

    /// Materialize the model as a dense symmetric matrix.
    pub fn materialize(&self) -> Matrix {
        match self {
            CovModel::Dense { matrix } => matrix.clone(),
            CovModel::Diagonal { variances } => Matrix::from_diagonal(variances),
            CovModel::Isotropic { variance, dim } => Matrix::identity(*dim, *dim) * *variance,
            CovModel::Ar1 { rho, dim } => {
                Matrix::from_fn(*dim, *dim, |i, j| rho.powi((i as i32 - j as i32).abs()))
            }
            CovModel::Kronecker { left, right } => {
                left.materialize().kronecker(&right.materialize())
            }
        }
    }

    /// Symmetric eigendecomposition with eigenvalues sorted in descending
    /// order (ties broken by original index). Kronecker models are
    /// decomposed factor-wise, so the eigenvector matrix is a column
    /// permutation of `P_left (x) P_right`.
    pub fn eig_sym(&self) -> Result<EigenPair> {
        let (basis, values) = self.spectral()?;
        let p = basis.materialize();
        sort_eigenpair(p, values)
    }

    /// Spectral form without the descending-order sort: a basis that can be
    /// applied without materializing the Kronecker product, and the matching
    /// (unsorted) eigenvalues.
    pub(crate) fn spectral(&self) -> Result<(SpectralBasis, Vector)> {
        match self {
            CovModel::Diagonal { variances } => {
                Ok((SpectralBasis::Identity { dim: variances.len() }, variances.clone()))
            }
            CovModel::Isotropic { variance, dim } => Ok((
                SpectralBasis::Identity { dim: *dim },
                Vector::from_element(*dim, *variance),
            )),
            CovModel::Dense { matrix } => {
                let (p, lam) = sym_eig(matrix)?;
                Ok((SpectralBasis::Dense { p }, lam))
            }
            CovModel::Ar1 { .. } => {
                let (p, lam) = sym_eig(&self.materialize())?;
                Ok((SpectralBasis::Dense { p }, lam))
            }
            CovModel::Kronecker { left, right } => {
                let (bl, ll) = left.spectral()?;
                let (br, lr) = right.spectral()?;
                let values = Vector::from_iterator(
                    ll.len() * lr.len(),
                    ll.iter().flat_map(|a| lr.iter().map(move |b| a * b)),
                );
                Ok((SpectralBasis::Kronecker { left: Box::new(bl), right: Box::new(br) }, values))
            }
        }
    }

    /// Lower Cholesky factor of the materialized model, exploiting structure
    /// where it is cheap to do so. `Kronecker` uses `chol(A (x) B) =
    /// chol(A) (x) chol(B)`.
    pub fn cholesky_factor(&self) -> Result<CholFactor> {
        match self {
            CovModel::Diagonal { variances } => {
                Ok(CholFactor::Scale { sd: variances.map(|v| v.sqrt()) })
            }
            CovModel::Isotropic { variance, dim } => {
                Ok(CholFactor::Scale { sd: Vector::from_element(*dim, variance.sqrt()) })
            }
            CovModel::Kronecker { left, right } => Ok(CholFactor::Kronecker {
                left: Box::new(left.cholesky_factor()?),
                right: Box::new(right.cholesky_factor()?),
            }),
            _ => {
                let m = self.materialize();
                let chol = nalgebra::Cholesky::new(m).ok_or_else(|| {
                    Error::NotPositiveDefinite("Cholesky factorization failed".into())
                })?;
                Ok(CholFactor::Dense { l: chol.l() })
            }
        }
    }
}

/// Lower-triangular factor `L` with `L L^T = Sigma`, kept structured.
#[derive(Debug, Clone)]
pub enum CholFactor {
    Dense { l: Matrix },
    Scale { sd: Vector },
    Kronecker { left: Box<CholFactor>, right: Box<CholFactor> },
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        match self {
            CholFactor::Dense { l } => l.nrows(),
            CholFactor::Scale { sd } => sd.len(),
            CholFactor::Kronecker { left, right } => left.dim() * right.dim(),
        }
    }

    /// `L z` for a vector `z`.
    pub fn apply(&self, z: &Vector) -> Vector {
        match self {
            CholFactor::Dense { l } => l * z,
            CholFactor::Scale { sd } => z.component_mul(sd),
            CholFactor::Kronecker { left, right } => {
                // (L_a (x) L_b) vec(M) = vec(L_b M L_a^T)
                let (a, b) = (left.dim(), right.dim());
                let m = DMatrix::from_column_slice(b, a, z.as_slice());
                let mut cols: Vec<Vector> = Vec::with_capacity(a);
                for j in 0..a {
                    cols.push(right.apply(&m.column(j).into_owned()));
                }
                let bm = DMatrix::from_columns(&cols);
                // now apply left to the rows
                let mut out = DMatrix::zeros(b, a);
                for i in 0..b {
                    let row: Vector = bm.row(i).transpose();
                    out.set_row(i, &left.apply(&row).transpose());
                }
                Vector::from_column_slice(out.as_slice())
            }
        }
    }
}

/// Orthonormal eigenvectors `P` (columns) and eigenvalues sorted descending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub vectors: Matrix,
    pub values: Vector,
}

impl EigenPair {
    /// `P diag(values) P^T`, for reconstruction checks.
    pub fn reconstruct(&self) -> Matrix {
        let scaled = Matrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * self.values[j]
        });
        &scaled * self.vectors.transpose()
    }
}

/// Eigenvector basis kept in a form that supports `P^T x` without
/// materializing Kronecker products.
#[derive(Debug, Clone)]
pub enum SpectralBasis {
    Identity { dim: usize },
    Dense { p: Matrix },
    Kronecker { left: Box<SpectralBasis>, right: Box<SpectralBasis> },
}

impl SpectralBasis {
    pub fn dim(&self) -> usize {
        match self {
            SpectralBasis::Identity { dim } => *dim,
            SpectralBasis::Dense { p } => p.nrows(),
            SpectralBasis::Kronecker { left, right } => left.dim() * right.dim(),
        }
    }

    /// `P^T x`.
    pub fn apply_transpose(&self, x: &Vector) -> Vector {
        match self {
            SpectralBasis::Identity { .. } => x.clone(),
            SpectralBasis::Dense { p } => p.tr_mul(x),
            SpectralBasis::Kronecker { left, right } => {
                // (A (x) B)^T vec(M) = vec(B^T M A)
                let (a, b) = (left.dim(), right.dim());
                let m = DMatrix::from_column_slice(b, a, x.as_slice());
                let bm = right.tr_mul_mat(&m);
                let out = left.mul_mat_from_right(&bm);
                Vector::from_column_slice(out.as_slice())
            }
        }
    }

    /// `P x`.
    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            SpectralBasis::Identity { .. } => x.clone(),
            SpectralBasis::Dense { p } => p * x,
            SpectralBasis::Kronecker { left, right } => {
                // (A (x) B) vec(M) = vec(B M A^T)
                let (a, b) = (left.dim(), right.dim());
                let m = DMatrix::from_column_slice(b, a, x.as_slice());
                let bm = right.mul_mat(&m);
                let out = left.tr_mul_mat_from_right(&bm);
                Vector::from_column_slice(out.as_slice())
            }
        }
    }

    /// Materialize the basis as a dense matrix.
    pub fn materialize(&self) -> Matrix {
        match self {
            SpectralBasis::Identity { dim } => Matrix::identity(*dim, *dim),
            SpectralBasis::Dense { p } => p.clone(),
            SpectralBasis::Kronecker { left, right } => {
                left.materialize().kronecker(&right.materialize())
            }
        }
    }

    fn tr_mul_mat(&self, m: &Matrix) -> Matrix {
        match self {
            SpectralBasis::Identity { .. } => m.clone(),
            SpectralBasis::Dense { p } => p.tr_mul(m),
            SpectralBasis::Kronecker { .. } => self.materialize().tr_mul(m),
        }
    }

    fn mul_mat(&self, m: &Matrix) -> Matrix {
        match self {
            SpectralBasis::Identity { .. } => m.clone(),
            SpectralBasis::Dense { p } => p * m,
            SpectralBasis::Kronecker { .. } => &self.materialize() * m,
        }
    }

    /// `M P` for the basis `P`.
    fn mul_mat_from_right(&self, m: &Matrix) -> Matrix {
        match self {
            SpectralBasis::Identity { .. } => m.clone(),
            SpectralBasis::Dense { p } => m * p,
            SpectralBasis::Kronecker { .. } => m * self.materialize(),
        }
    }

    /// `M P^T` for the basis `P`.
    fn tr_mul_mat_from_right(&self, m: &Matrix) -> Matrix {
        match self {
            SpectralBasis::Identity { .. } => m.clone(),
            SpectralBasis::Dense { p } => m * p.transpose(),
            SpectralBasis::Kronecker { .. } => m * self.materialize().transpose(),
        }
    }
}

fn sym_eig(m: &Matrix) -> Result<(Matrix, Vector)> {
    let sym = 0.5 * (m + m.transpose());
    let eig = nalgebra::SymmetricEigen::try_new(sym, 1e-13, 0)
        .ok_or_else(|| Error::Eigen(format!("symmetric eigensolver did not converge (dim {})", m.nrows())))?;
    Ok((eig.eigenvectors, eig.eigenvalues))
}

/// Sort eigenvalues descending (ties keep original index order) and permute
/// the eigenvector columns to match.
fn sort_eigenpair(p: Matrix, values: Vector) -> Result<EigenPair> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        values[j].partial_cmp(&values[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j))
    });
    let sorted_vals = Vector::from_iterator(values.len(), order.iter().map(|&i| values[i]));
    let cols: Vec<_> = order.iter().map(|&i| p.column(i).into_owned()).collect();
    let sorted_p = Matrix::from_columns(&cols);
    Ok(EigenPair { vectors: sorted_p, values: sorted_vals })
}
