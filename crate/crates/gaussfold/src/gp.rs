//! Gaussian-process decomposition on finite index sets.
//!
//! Noise processes are realized as Gaussian vectors with the kernel's Gram
//! matrix as covariance, so every operation reduces exactly to the
//! finite-dimensional machinery. Fold values are defined only on the
//! declared index set; evaluating at new points after decomposition would
//! need a noise-extension convention that is deliberately not offered.

use std::sync::Arc;

use crate::decompose::{general_decompose, FoldSet, OrthogonalPlan};
use crate::error::{Error, Result};
use crate::laws::{conditional_law, fold_marginal, ConditionalLaw, GaussianLaw};
use crate::linalg::{CovModel, Matrix, Vector};

/// A point in the index set.
pub type IndexPoint = Vec<f64>;

/// A user-supplied kernel evaluator.
pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// A positive definite covariance function over an index set in `R^d`.
#[derive(Clone)]
pub enum CovFunction {
    /// `sigma'^2 1{t = t'}`: the recommended auxiliary process.
    WhiteNoise { variance: f64 },
    /// `variance * exp(-||t - t'||^2 / (2 lengthscale^2))`.
    SquaredExp { variance: f64, lengthscale: f64 },
    /// Matern with smoothness 3/2:
    /// `variance * (1 + sqrt(3) r / l) exp(-sqrt(3) r / l)`.
    Matern32 { variance: f64, lengthscale: f64 },
    /// A user-supplied kernel.
    Custom(KernelFn),
}

impl std::fmt::Debug for CovFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CovFunction::WhiteNoise { variance } => {
                write!(f, "WhiteNoise {{ variance: {variance} }}")
            }
            CovFunction::SquaredExp { variance, lengthscale } => {
                write!(f, "SquaredExp {{ variance: {variance}, lengthscale: {lengthscale} }}")
            }
            CovFunction::Matern32 { variance, lengthscale } => {
                write!(f, "Matern32 {{ variance: {variance}, lengthscale: {lengthscale} }}")
            }
            CovFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl CovFunction {
    pub fn white_noise(variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::InvalidParameter("white-noise variance must be positive".into()));
        }
        Ok(CovFunction::WhiteNoise { variance })
    }

    pub fn squared_exp(variance: f64, lengthscale: f64) -> Result<Self> {
        if !(variance > 0.0) || !(lengthscale > 0.0) {
            return Err(Error::InvalidParameter("kernel parameters must be positive".into()));
        }
        Ok(CovFunction::SquaredExp { variance, lengthscale })
    }

    pub fn matern32(variance: f64, lengthscale: f64) -> Result<Self> {
        if !(variance > 0.0) || !(lengthscale > 0.0) {
            return Err(Error::InvalidParameter("kernel parameters must be positive".into()));
        }
        Ok(CovFunction::Matern32 { variance, lengthscale })
    }

    pub fn evaluate(&self, s: &[f64], t: &[f64]) -> f64 {
        match self {
            CovFunction::WhiteNoise { variance } => {
                if s == t {
                    *variance
                } else {
                    0.0
                }
            }
            CovFunction::SquaredExp { variance, lengthscale } => {
                let r2: f64 = s.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
                variance * (-0.5 * r2 / (lengthscale * lengthscale)).exp()
            }
            CovFunction::Matern32 { variance, lengthscale } => {
                let r: f64 = s.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let z = 3.0_f64.sqrt() * r / lengthscale;
                variance * (1.0 + z) * (-z).exp()
            }
            CovFunction::Custom(k) => k(s, t),
        }
    }

    /// Gram matrix on a finite index set.
    pub fn gram(&self, points: &[IndexPoint]) -> Result<Matrix> {
        let d = points.len();
        if d == 0 {
            return Err(Error::InvalidParameter("index set is empty".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Dimension("index points have mixed dimensions".into()));
        }
        let m = Matrix::from_fn(d, d, |i, j| self.evaluate(&points[i], &points[j]));
        Ok(0.5 * (&m + m.transpose()))
    }
}

fn require_distinct(points: &[IndexPoint]) -> Result<()> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i] == points[j] {
                return Err(Error::InvalidParameter(format!(
                    "index points {i} and {j} coincide; fold laws on duplicated points are singular"
                )));
            }
        }
    }
    Ok(())
}

/// Fold values of a decomposed Gaussian-process realization on a finite
/// index set.
#[derive(Debug, Clone)]
pub struct GpFoldSet {
    pub index_set: Vec<IndexPoint>,
    pub folds: Vec<Vector>,
    pub plan: OrthogonalPlan,
    pub cprime: CovFunction,
    inner: FoldSet,
}

impl GpFoldSet {
    /// Recover the observed process values exactly via `Q^T`.
    pub fn reconstruct(&self) -> Result<Vector> {
        let x = crate::decompose::reconstruct(&self.inner)?;
        Ok(x.row(0).transpose())
    }
}

/// Decompose one Gaussian-process realization observed on `index_set` into
/// `K = r + 1` folds: realize the noise processes as draws from the Gram
/// matrix of `cprime` and apply the plan's orthogonal combination.
pub fn gp_decompose(
    x_values: &Vector,
    index_set: &[IndexPoint],
    plan: &OrthogonalPlan,
    cprime: &CovFunction,
    seed: u64,
) -> Result<GpFoldSet> {
    if x_values.len() != index_set.len() {
        return Err(Error::Dimension(format!(
            "{} observed values on {} index points",
            x_values.len(),
            index_set.len()
        )));
    }
    if plan.n() != 1 {
        return Err(Error::InvalidPlan("process decomposition expects a single realization (n = 1)".into()));
    }
    if plan.k() != plan.r + 1 {
        return Err(Error::InvalidPlan("process plans put one process per fold (K = r + 1)".into()));
    }
    require_distinct(index_set)?;
    let gram = cprime.gram(index_set)?;
    let sigma_p = CovModel::dense(gram)?;
    let row = Matrix::from_fn(1, x_values.len(), |_, j| x_values[j]);
    let inner = general_decompose(&row, plan, &sigma_p, seed)?;
    let folds = (0..plan.k()).map(|k| inner.fold_vector(k)).collect::<Result<Vec<_>>>()?;
    Ok(GpFoldSet {
        index_set: index_set.to_vec(),
        folds,
        plan: plan.clone(),
        cprime: cprime.clone(),
        inner,
    })
}

/// The marginal law of fold `k` on the index set:
/// mean `q_k mu(T_d)` and covariance `q_k^2 Gram(C) + (1 - q_k^2) Gram(C')`.
pub fn gp_fold_marginal(
    k: usize,
    plan: &OrthogonalPlan,
    index_set: &[IndexPoint],
    mu_fn: &dyn Fn(&[f64]) -> f64,
    c: &CovFunction,
    cprime: &CovFunction,
) -> Result<GaussianLaw> {
    let q = fold_coefficient(plan, k)?;
    require_distinct(index_set)?;
    let mu = mean_vector(index_set, mu_fn);
    let sigma = CovModel::dense(c.gram(index_set)?)?;
    let sigma_p = CovModel::dense(cprime.gram(index_set)?)?;
    fold_marginal(q, &mu, &sigma, &sigma_p)
}

/// The conditional law of fold 2 given fold 1 on the index set, for a
/// two-fold plan: the finite-dimensional conditional with the kernel Gram
/// matrices in place of the covariances.
pub fn gp_conditional(
    x1_values: &Vector,
    plan: &OrthogonalPlan,
    index_set: &[IndexPoint],
    mu_fn: &dyn Fn(&[f64]) -> f64,
    c: &CovFunction,
    cprime: &CovFunction,
) -> Result<ConditionalLaw> {
    if plan.k() != 2 {
        return Err(Error::InvalidPlan("conditional law is defined for two-fold plans".into()));
    }
    let q1 = fold_coefficient(plan, 0)?;
    let q2 = fold_coefficient(plan, 1)?;
    require_distinct(index_set)?;
    let mu = mean_vector(index_set, mu_fn);
    let sigma = CovModel::dense(c.gram(index_set)?)?;
    let sigma_p = CovModel::dense(cprime.gram(index_set)?)?;
    conditional_law(x1_values, q1, q2, &mu, &sigma, &sigma_p)
}

fn fold_coefficient(plan: &OrthogonalPlan, k: usize) -> Result<f64> {
    let coeffs = plan.fold_coefficients().ok_or_else(|| {
        Error::InvalidPlan("plan does not carry per-fold signal coefficients".into())
    })?;
    coeffs
        .get(k)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("fold index {k} out of range")))
}

fn mean_vector(index_set: &[IndexPoint], mu_fn: &dyn Fn(&[f64]) -> f64) -> Vector {
    Vector::from_iterator(index_set.len(), index_set.iter().map(|p| mu_fn(p)))
}
