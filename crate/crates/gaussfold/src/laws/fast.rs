//! Diagonalized likelihood evaluation for two dependent folds when the
//! auxiliary covariance is a multiple of the identity.
//!
//! With `Sigma* = P Lambda P^T` and `Sigma' = sigma'^2 I`, both the marginal
//! law of the first fold and the conditional law of the second given the
//! first become diagonal in the eigenbasis, so every log-density reduces to
//! univariate Gaussian computations. For Kronecker models the rotation
//! `P^T x` is applied factor-wise without materializing `P`.

use crate::error::{Error, Result};
use crate::linalg::cov::SpectralBasis;
use crate::linalg::{CovModel, Vector};

const LN_2PI: f64 = 1.8378770664093453;

/// Precomputed eigenbasis state for repeated fold-pair likelihood
/// evaluations against one candidate covariance.
#[derive(Debug)]
pub struct DiagonalizedPair {
    basis: SpectralBasis,
    lambda: Vector,
    rotated_mean: Vector,
    sigma_p2: f64,
    q1: f64,
    q2: f64,
}

impl DiagonalizedPair {
    /// Eigendecompose `sigma_star` and cache the rotated mean. `sigma_prime`
    /// is the standard deviation of the isotropic auxiliary noise.
    pub fn new(
        mu: &Vector,
        sigma_star: &CovModel,
        sigma_prime: f64,
        q1: f64,
        q2: f64,
    ) -> Result<Self> {
        if sigma_star.dim() != mu.len() {
            return Err(Error::Dimension("mu / Sigma* dimensions differ".into()));
        }
        if !(sigma_prime > 0.0) {
            return Err(Error::InvalidParameter("sigma_prime must be positive".into()));
        }
        if (q1 * q1 + q2 * q2 - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(
                "fold coefficients must satisfy q1^2 + q2^2 = 1".into(),
            ));
        }
        let (basis, lambda) = sigma_star.spectral()?;
        if lambda.iter().any(|&l| l <= 0.0) {
            return Err(Error::NotPositiveDefinite(
                "Sigma* has non-positive eigenvalues".into(),
            ));
        }
        let rotated_mean = basis.apply_transpose(mu);
        Ok(DiagonalizedPair { basis, lambda, rotated_mean, sigma_p2: sigma_prime * sigma_prime, q1, q2 })
    }

    /// Build from an already-computed spectral form (used by optimizers that
    /// cache factor eigendecompositions across evaluations).
    pub fn from_spectral(
        mu: &Vector,
        basis: SpectralBasis,
        lambda: Vector,
        sigma_prime: f64,
        q1: f64,
        q2: f64,
    ) -> Self {
        let rotated_mean = basis.apply_transpose(mu);
        DiagonalizedPair { basis, lambda, rotated_mean, sigma_p2: sigma_prime * sigma_prime, q1, q2 }
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// Rotate an observation into the eigenbasis.
    pub fn rotate(&self, x: &Vector) -> Vector {
        self.basis.apply_transpose(x)
    }

    /// Log-density of the first fold marginal at `x1`: coordinate-wise
    /// `N(q1 m_j, q1^2 lambda_j + (1 - q1^2) sigma'^2)` in the eigenbasis.
    pub fn marginal_log_density(&self, x1: &Vector) -> Result<f64> {
        let y1 = self.check_and_rotate(x1)?;
        Ok(self.marginal_log_density_rotated(&y1))
    }

    pub(crate) fn marginal_log_density_rotated(&self, y1: &Vector) -> f64 {
        let q1sq = self.q1 * self.q1;
        let mut acc = 0.0;
        for j in 0..self.dim() {
            let v = q1sq * self.lambda[j] + (1.0 - q1sq) * self.sigma_p2;
            let d = y1[j] - self.q1 * self.rotated_mean[j];
            acc += LN_2PI + v.ln() + d * d / v;
        }
        -0.5 * acc
    }

    /// Log-density of the second fold given the first, evaluated at `x2`
    /// with conditioning value `x1`. In the eigenbasis the conditional is
    /// coordinate-wise Gaussian with
    /// mean `q2 m_j + q1 q2 (lambda_j - sigma'^2) / v_j * (y1_j - q1 m_j)` and
    /// variance `lambda_j sigma'^2 / v_j`, `v_j = q1^2 lambda_j + (1-q1^2) sigma'^2`.
    pub fn conditional_log_density(&self, x1: &Vector, x2: &Vector) -> Result<f64> {
        let y1 = self.check_and_rotate(x1)?;
        let y2 = self.check_and_rotate(x2)?;
        Ok(self.conditional_log_density_rotated(&y1, &y2))
    }

    pub(crate) fn conditional_log_density_rotated(&self, y1: &Vector, y2: &Vector) -> f64 {
        let (q1, q2) = (self.q1, self.q2);
        let q1sq = q1 * q1;
        let mut acc = 0.0;
        for j in 0..self.dim() {
            let lam = self.lambda[j];
            let v = q1sq * lam + (1.0 - q1sq) * self.sigma_p2;
            let m = self.rotated_mean[j];
            let cond_mean = q2 * m + q1 * q2 * (lam - self.sigma_p2) / v * (y1[j] - q1 * m);
            // algebraic simplification of
            // q2^2 lam + (1 - q2^2) s'^2 - q1^2 q2^2 (lam - s'^2)^2 / v
            let cond_var = lam * self.sigma_p2 / v;
            let d = y2[j] - cond_mean;
            acc += LN_2PI + cond_var.ln() + d * d / cond_var;
        }
        -0.5 * acc
    }

    /// Both log-densities at once.
    pub fn pair_log_density(&self, x1: &Vector, x2: &Vector) -> Result<(f64, f64)> {
        let y1 = self.check_and_rotate(x1)?;
        let y2 = self.check_and_rotate(x2)?;
        Ok((
            self.marginal_log_density_rotated(&y1),
            self.conditional_log_density_rotated(&y1, &y2),
        ))
    }

    fn check_and_rotate(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has length {}, law dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(self.rotate(x))
    }
}

/// One-shot fast evaluation: the log-density of the first fold marginal at
/// `x1` and of the second fold given the first at `x2`. Requires isotropic
/// auxiliary noise with standard deviation `sigma_prime`.
pub fn fast_log_density_pair(
    x1: &Vector,
    x2: &Vector,
    mu: &Vector,
    sigma_star: &CovModel,
    sigma_prime: f64,
    q1: f64,
    q2: f64,
) -> Result<(f64, f64)> {
    DiagonalizedPair::new(mu, sigma_star, sigma_prime, q1, q2)?.pair_log_density(x1, x2)
}

/// Evaluate the fold-pair log-densities choosing the route automatically:
/// the diagonalized fast path when the auxiliary covariance is isotropic,
/// otherwise the dense marginal/conditional laws.
pub fn pair_log_densities(
    x1: &Vector,
    x2: &Vector,
    mu: &Vector,
    sigma: &CovModel,
    sigma_p: &CovModel,
    q1: f64,
    q2: f64,
) -> Result<(f64, f64)> {
    if let CovModel::Isotropic { variance, .. } = sigma_p {
        return fast_log_density_pair(x1, x2, mu, sigma, variance.sqrt(), q1, q2);
    }
    let marg = super::fold_marginal(q1, mu, sigma, sigma_p)?;
    let cond = super::conditional_law(x1, q1, q2, mu, sigma, sigma_p)?;
    Ok((marg.log_density(x1)?, cond.log_density(x2)?))
}
