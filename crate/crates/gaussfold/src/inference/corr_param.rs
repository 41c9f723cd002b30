//! Unconstrained parameterization of correlation matrices via hyperspherical
//! angles of the Cholesky factor.
//!
//! Row `u` of the lower factor `L` is a point on the unit `u`-sphere written
//! in spherical coordinates with `u` angles in `(0, pi)`; `Delta = L L^T`
//! then has unit diagonal by construction and is positive definite whenever
//! no angle is degenerate. Angles map to the real line through a scaled
//! logistic, so optimizers work on a fully unconstrained vector. The zero
//! vector corresponds to the identity matrix.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const ANGLE_FLOOR: f64 = 1e-7;

/// Number of angles parameterizing an `a x a` correlation matrix.
pub fn angle_count(a: usize) -> usize {
    a * (a - 1) / 2
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Map unconstrained coordinates to angles in `(0, pi)`.
fn angle_of(z: f64) -> f64 {
    (std::f64::consts::PI * logistic(z)).clamp(ANGLE_FLOOR, std::f64::consts::PI - ANGLE_FLOOR)
}

/// Lower Cholesky factor of the correlation matrix for unconstrained
/// coordinates `z` (length `a(a-1)/2`).
pub fn chol_from_unconstrained(z: &[f64], a: usize) -> Result<Matrix> {
    if z.len() != angle_count(a) {
        return Err(Error::Dimension(format!(
            "expected {} angle coordinates for a {a}x{a} correlation matrix, got {}",
            angle_count(a),
            z.len()
        )));
    }
    let mut l = Matrix::zeros(a, a);
    l[(0, 0)] = 1.0;
    let mut idx = 0;
    for u in 1..a {
        let mut prod = 1.0;
        for j in 0..u {
            let theta = angle_of(z[idx]);
            idx += 1;
            l[(u, j)] = prod * theta.cos();
            prod *= theta.sin();
        }
        l[(u, u)] = prod;
    }
    Ok(l)
}

/// The correlation matrix for unconstrained coordinates `z`.
pub fn corr_from_unconstrained(z: &[f64], a: usize) -> Result<Matrix> {
    let l = chol_from_unconstrained(z, a)?;
    Ok(&l * l.transpose())
}

/// Recover unconstrained coordinates from a correlation matrix (inverse of
/// [`corr_from_unconstrained`] up to angle clamping). The matrix must be
/// positive definite with unit diagonal.
pub fn unconstrained_from_corr(delta: &Matrix) -> Result<Vec<f64>> {
    let a = delta.nrows();
    if delta.ncols() != a {
        return Err(Error::Dimension("correlation matrix must be square".into()));
    }
    for i in 0..a {
        if (delta[(i, i)] - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "diagonal entry {i} is {}, expected 1",
                delta[(i, i)]
            )));
        }
    }
    let chol = nalgebra::Cholesky::new(delta.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite("correlation matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let mut z = Vec::with_capacity(angle_count(a));
    for u in 1..a {
        let mut prod = 1.0_f64;
        for j in 0..u {
            let cos_theta = if prod.abs() < 1e-300 {
                0.0
            } else {
                (l[(u, j)] / prod).clamp(-1.0 + 1e-12, 1.0 - 1e-12)
            };
            let theta = cos_theta.acos().clamp(ANGLE_FLOOR, std::f64::consts::PI - ANGLE_FLOOR);
            z.push(logit(theta / std::f64::consts::PI));
            prod *= theta.sin();
        }
    }
    Ok(z)
}
