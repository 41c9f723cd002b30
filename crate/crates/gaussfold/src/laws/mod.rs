//! Exact Gaussian laws of folds: joint, marginal, conditional, and collapsed,
//! with log-density evaluation.
//!
//! Dense-path computations are always available; when the auxiliary
//! covariance is isotropic and the candidate covariance has a cheap factor
//! eigendecomposition, the diagonalized fast path in [`fast`] evaluates the
//! same laws with univariate Gaussian computations.

pub mod fast;

pub use fast::{fast_log_density_pair, pair_log_densities, DiagonalizedPair};

use serde::{Deserialize, Serialize};

use crate::decompose::FoldSet;
use crate::error::{Error, Result};
use crate::linalg::{CovModel, Matrix, Vector};

const LN_2PI: f64 = 1.8378770664093453;

/// A multivariate Gaussian `N(mean, cov)` with the covariance kept in
/// structured form where the inputs allow it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: Vector,
    pub cov: CovModel,
}

impl GaussianLaw {
    pub fn new(mean: Vector, cov: CovModel) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::Dimension(format!(
                "mean has length {}, covariance dimension {}",
                mean.len(),
                cov.dim()
            )));
        }
        Ok(GaussianLaw { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Exact Gaussian log-density at `x`. Diagonal and isotropic covariances
    /// evaluate coordinate-wise; everything else goes through a Cholesky
    /// factorization of the materialized covariance.
    pub fn log_density(&self, x: &Vector) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has length {}, law dimension {}",
                x.len(),
                self.dim()
            )));
        }
        match &self.cov {
            CovModel::Diagonal { variances } => {
                Ok(diag_log_density(x, &self.mean, variances))
            }
            CovModel::Isotropic { variance, dim } => {
                let vars = Vector::from_element(*dim, *variance);
                Ok(diag_log_density(x, &self.mean, &vars))
            }
            other => {
                let (chol, _) = chol_with_jitter(other.materialize())?;
                let centered = x - &self.mean;
                let half_maha = chol.l().solve_lower_triangular(&centered).map(|v| v.norm_squared()).ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
                let ln_det = 2.0 * (0..x.len()).map(|i| chol.l()[(i, i)].ln()).sum::<f64>();
                Ok(-0.5 * (x.len() as f64 * LN_2PI + ln_det + half_maha))
            }
        }
    }
}

/// The conditional Gaussian law of one fold given another, pinned at a
/// conditioning value. Only the mean depends on the conditioning value; the
/// covariance is shared by all of them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionalLaw {
    /// The conditional law evaluated at `conditioning_value`.
    pub base: GaussianLaw,
    pub conditioning_value: Vector,
    /// Signal coefficients: `(q1, q2)` for a fold pair, `(d_A, d_B)` for
    /// collapsed groups.
    pub coefficients: (f64, f64),
}

impl ConditionalLaw {
    pub fn log_density(&self, x: &Vector) -> Result<f64> {
        self.base.log_density(x)
    }
}

/// The joint law of the stacked folds `(X^(1); ...; X^(K))` for a dependent
/// single-row decomposition with data column `q_col`: mean stacks `q_k mu`
/// and the covariance is
/// `Q_X Q_X^T (x) Sigma + (I_K - Q_X Q_X^T) (x) Sigma'`.
pub fn joint_law(
    q_col: &Vector,
    mu: &Vector,
    sigma: &CovModel,
    sigma_p: &CovModel,
) -> Result<GaussianLaw> {
    if (q_col.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter("q_col must be a unit vector".into()));
    }
    let p = mu.len();
    if sigma.dim() != p || sigma_p.dim() != p {
        return Err(Error::Dimension("mu / Sigma / Sigma' dimensions differ".into()));
    }
    let k = q_col.len();
    let s = sigma.materialize();
    let sp = sigma_p.materialize();
    let qqt = q_col * q_col.transpose();
    let mut cov = Matrix::zeros(k * p, k * p);
    for bi in 0..k {
        for bj in 0..k {
            let w_s = qqt[(bi, bj)];
            let w_p = if bi == bj { 1.0 - w_s } else { -w_s };
            let block = &s * w_s + &sp * w_p;
            cov.view_mut((bi * p, bj * p), (p, p)).copy_from(&block);
        }
    }
    let mut mean = Vector::zeros(k * p);
    for bi in 0..k {
        mean.rows_mut(bi * p, p).copy_from(&(mu * q_col[bi]));
    }
    GaussianLaw::new(mean, CovModel::dense(cov)?)
}

/// The marginal law of fold `k`: `N_p(q_k mu, q_k^2 Sigma + (1 - q_k^2) Sigma')`.
pub fn fold_marginal(
    q_k: f64,
    mu: &Vector,
    sigma: &CovModel,
    sigma_p: &CovModel,
) -> Result<GaussianLaw> {
    if q_k.abs() > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("|q_k| must be <= 1, got {q_k}")));
    }
    let cov = mix_covariances(q_k * q_k, sigma, sigma_p)?;
    GaussianLaw::new(mu * q_k, cov)
}

/// `w * Sigma + (1 - w) * Sigma'`, staying structured when both inputs are
/// diagonal-like.
fn mix_covariances(w: f64, sigma: &CovModel, sigma_p: &CovModel) -> Result<CovModel> {
    if sigma.dim() != sigma_p.dim() {
        return Err(Error::Dimension("covariance dimensions differ".into()));
    }
    match (sigma, sigma_p) {
        (CovModel::Isotropic { variance: a, dim }, CovModel::Isotropic { variance: b, .. }) => {
            CovModel::isotropic(w * a + (1.0 - w) * b, *dim)
        }
        (a, b) if is_diagonal_like(a) && is_diagonal_like(b) => {
            let da = diagonal_of(a);
            let db = diagonal_of(b);
            CovModel::diagonal(da * w + db * (1.0 - w))
        }
        (a, b) => CovModel::dense(a.materialize() * w + b.materialize() * (1.0 - w)),
    }
}

fn is_diagonal_like(c: &CovModel) -> bool {
    matches!(c, CovModel::Diagonal { .. } | CovModel::Isotropic { .. })
}

fn diagonal_of(c: &CovModel) -> Vector {
    match c {
        CovModel::Diagonal { variances } => variances.clone(),
        CovModel::Isotropic { variance, dim } => Vector::from_element(*dim, *variance),
        _ => unreachable!("diagonal_of on non-diagonal model"),
    }
}

/// The conditional law of fold 2 given fold 1 for a two-fold dependent
/// decomposition:
/// mean `q2 mu + q1 q2 (Sigma - Sigma') V1^{-1} (x1 - q1 mu)` and covariance
/// `q2^2 Sigma + (1 - q2^2) Sigma' - q1^2 q2^2 (Sigma - Sigma') V1^{-1} (Sigma - Sigma')`
/// with `V1 = q1^2 Sigma + (1 - q1^2) Sigma'`.
pub fn conditional_law(
    x1: &Vector,
    q1: f64,
    q2: f64,
    mu: &Vector,
    sigma: &CovModel,
    sigma_p: &CovModel,
) -> Result<ConditionalLaw> {
    if (q1 * q1 + q2 * q2 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "two-fold coefficients must satisfy q1^2 + q2^2 = 1, got {q1}, {q2}"
        )));
    }
    let p = mu.len();
    if x1.len() != p || sigma.dim() != p || sigma_p.dim() != p {
        return Err(Error::Dimension("x1 / mu / covariance dimensions differ".into()));
    }
    let s = sigma.materialize();
    let sp = sigma_p.materialize();
    let diff = &s - &sp;
    let v1 = &s * (q1 * q1) + &sp * (1.0 - q1 * q1);
    let (chol, _) = chol_with_jitter(v1)?;
    let centered = x1 - mu * q1;
    let v1_inv_centered = chol.solve(&centered);
    let mean = mu * q2 + &diff * v1_inv_centered * (q1 * q2);
    let v1_inv_diff = chol.solve(&diff);
    let cov = &s * (q2 * q2) + &sp * (1.0 - q2 * q2) - &diff * v1_inv_diff * (q1 * q1 * q2 * q2);
    let cov = 0.5 * (&cov + cov.transpose());
    Ok(ConditionalLaw {
        base: GaussianLaw::new(mean, CovModel::dense(cov)?)?,
        conditioning_value: x1.clone(),
        coefficients: (q1, q2),
    })
}

/// Two collapsed fold groups, their exact joint law, and a factory for the
/// conditional law of one group given the other.
#[derive(Debug, Clone)]
pub struct CollapsedPair {
    pub x_a: Vector,
    pub x_b: Vector,
    pub d_a: f64,
    pub d_b: f64,
    pub joint: GaussianLaw,
    mu: Vector,
    sigma: CovModel,
    sigma_p: CovModel,
}

impl CollapsedPair {
    /// The conditional law of the `B` group given the observed `A` group:
    /// mean `d_B mu + d_B (S - S') (d_A S + (1 - d_A) S')^{-1} (x_A - d_A mu)`,
    /// covariance
    /// `d_B^2 S + d_B (1 - d_B) S' - d_A d_B^2 (S - S') (d_A S + (1 - d_A) S')^{-1} (S - S')`.
    pub fn conditional(&self) -> Result<ConditionalLaw> {
        let s = self.sigma.materialize();
        let sp = self.sigma_p.materialize();
        let diff = &s - &sp;
        let v_a = &s * self.d_a + &sp * (1.0 - self.d_a);
        let (chol, _) = chol_with_jitter(v_a)?;
        let centered = &self.x_a - &self.mu * self.d_a;
        let mean = &self.mu * self.d_b + &diff * chol.solve(&centered) * self.d_b;
        let cov = &s * (self.d_b * self.d_b)
            + &sp * (self.d_b * (1.0 - self.d_b))
            - &diff * chol.solve(&diff) * (self.d_a * self.d_b * self.d_b);
        let cov = 0.5 * (&cov + cov.transpose());
        Ok(ConditionalLaw {
            base: GaussianLaw::new(mean, CovModel::dense(cov)?)?,
            conditioning_value: self.x_a.clone(),
            coefficients: (self.d_a, self.d_b),
        })
    }
}

/// Collapse disjoint fold subsets `A` and `B` of a single-row decomposition
/// into the vectors `X^(A) = sum_{k in A} q_k X^(k)` and likewise for `B`,
/// together with their joint law. When `A` and `B` cover all folds,
/// `X^(A) + X^(B)` reproduces the original data vector exactly.
pub fn collapse(
    fs: &FoldSet,
    set_a: &[usize],
    set_b: &[usize],
    mu: &Vector,
    sigma: &CovModel,
) -> Result<CollapsedPair> {
    if fs.n != 1 {
        return Err(Error::InvalidPlan(
            "collapse is defined for single-observation decompositions (n = 1)".into(),
        ));
    }
    let q_col = fs.plan.fold_coefficients().ok_or_else(|| {
        Error::InvalidPlan("collapse needs a single-column signal plan (thinning/fission/block)".into())
    })?;
    let k = fs.plan.k();
    for idx in set_a.iter().chain(set_b.iter()) {
        if *idx >= k {
            return Err(Error::InvalidParameter(format!("fold index {idx} out of range")));
        }
    }
    for a in set_a {
        if set_b.contains(a) {
            return Err(Error::InvalidParameter("A and B must be disjoint".into()));
        }
    }
    let p = fs.p;
    let mut x_a = Vector::zeros(p);
    let mut d_a = 0.0;
    for &idx in set_a {
        x_a += fs.fold_vector(idx)? * q_col[idx];
        d_a += q_col[idx] * q_col[idx];
    }
    let mut x_b = Vector::zeros(p);
    let mut d_b = 0.0;
    for &idx in set_b {
        x_b += fs.fold_vector(idx)? * q_col[idx];
        d_b += q_col[idx] * q_col[idx];
    }

    let s = sigma.materialize();
    let sp = fs.sigma_prime.materialize();
    let diff = &s - &sp;
    let mut cov = Matrix::zeros(2 * p, 2 * p);
    cov.view_mut((0, 0), (p, p))
        .copy_from(&(&s * (d_a * d_a) + &sp * (d_a * (1.0 - d_a))));
    cov.view_mut((p, p), (p, p))
        .copy_from(&(&s * (d_b * d_b) + &sp * (d_b * (1.0 - d_b))));
    let cross = &diff * (d_a * d_b);
    cov.view_mut((0, p), (p, p)).copy_from(&cross);
    cov.view_mut((p, 0), (p, p)).copy_from(&cross);
    let mut mean = Vector::zeros(2 * p);
    mean.rows_mut(0, p).copy_from(&(mu * d_a));
    mean.rows_mut(p, p).copy_from(&(mu * d_b));

    Ok(CollapsedPair {
        x_a,
        x_b,
        d_a,
        d_b,
        joint: GaussianLaw::new(mean, CovModel::dense(cov)?)?,
        mu: mu.clone(),
        sigma: sigma.clone(),
        sigma_p: fs.sigma_prime.clone(),
    })
}

/// The two-layer representation of a fold marginal when the auxiliary
/// covariance is diagonal: an independent observation layer on top of the
/// latent `N_p(mu, Sigma)`.
#[derive(Debug, Clone)]
pub struct LatentForm {
    /// Signal loading of the observation layer.
    pub scale: f64,
    /// Per-coordinate emission variances `(1 - q1^2) sigma'_j^2`.
    pub emission_variances: Vector,
    pub latent_mean: Vector,
    pub latent_cov: CovModel,
    /// Set when `q1 = 1`, where the observation layer carries no noise.
    pub degenerate: bool,
}

impl LatentForm {
    /// Integrate the latent layer out: the observed marginal
    /// `N(q1 mu, q1^2 Sigma + diag(emission))`.
    pub fn marginal(&self) -> Result<GaussianLaw> {
        let q = self.scale;
        let base = self.latent_cov.materialize() * (q * q);
        let cov = base + Matrix::from_diagonal(&self.emission_variances);
        GaussianLaw::new(&self.latent_mean * q, CovModel::dense(cov)?)
    }
}

/// Build the latent two-layer form for a fold marginal with diagonal
/// auxiliary covariance `diag(sigma_diag^2)`.
pub fn latent_form(
    q1: f64,
    mu: &Vector,
    sigma: &CovModel,
    sigma_diag: &Vector,
) -> Result<LatentForm> {
    if sigma_diag.len() != mu.len() || sigma.dim() != mu.len() {
        return Err(Error::Dimension("latent form dimensions differ".into()));
    }
    if sigma_diag.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("sigma_diag entries must be positive".into()));
    }
    if !(0.0..=1.0).contains(&q1) {
        return Err(Error::InvalidParameter("q1 must lie in [0, 1]".into()));
    }
    let emission = sigma_diag.map(|sd| (1.0 - q1 * q1) * sd * sd);
    Ok(LatentForm {
        scale: q1,
        emission_variances: emission,
        latent_mean: mu.clone(),
        latent_cov: sigma.clone(),
        degenerate: q1 >= 1.0 - 1e-12,
    })
}

fn diag_log_density(x: &Vector, mean: &Vector, variances: &Vector) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        let d = x[i] - mean[i];
        acc += LN_2PI + variances[i].ln() + d * d / variances[i];
    }
    -0.5 * acc
}

/// Cholesky with the bounded jitter retry: on failure, add
/// `1e-10 * trace / dim` to the diagonal once, then give up.
pub(crate) fn chol_with_jitter(
    m: Matrix,
) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, bool)> {
    let dim = m.nrows();
    match nalgebra::Cholesky::new(m.clone()) {
        Some(c) => Ok((c, false)),
        None => {
            let jitter = 1e-10 * m.trace() / dim as f64;
            let jittered = m + Matrix::identity(dim, dim) * jitter;
            match nalgebra::Cholesky::new(jittered) {
                Some(c) => Ok((c, true)),
                None => Err(Error::NotPositiveDefinite(format!(
                    "covariance not PD even after jitter {jitter:.3e}"
                ))),
            }
        }
    }
}
