//! Orthogonal-matrix construction: completions, Haar draws, permutations.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Complete a unit vector `v` of length `k` to an orthogonal basis: returns a
/// `k x (k-1)` matrix `U` with `U^T U = I` and `U^T v = 0`.
///
/// The completion is deterministic (a Householder reflector mapping `e_1`
/// onto `v`, with each column sign-normalized so its first nonzero entry is
/// positive). For `k = 2` this yields `U = (v_2, -v_1)^T`.
pub fn orth_complete(v: &Vector) -> Result<Matrix> {
    let k = v.len();
    if k == 0 {
        return Err(Error::Dimension("cannot complete an empty vector".into()));
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "orth_complete requires a unit vector, got norm {norm}"
        )));
    }
    if k == 1 {
        return Ok(Matrix::zeros(1, 0));
    }
    // Householder reflector H = I - 2 w w^T / ||w||^2 with w = v + sign(v_1) e_1.
    // H maps e_1 to -sign(v_1) v, so columns 2..k of H are orthonormal and
    // orthogonal to v. The shifted sign avoids cancellation when v ~ e_1.
    let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = v.clone();
    w[0] += s;
    let wtw = w.norm_squared();
    let mut u = Matrix::zeros(k, k - 1);
    for col in 1..k {
        let coef = 2.0 * w[col] / wtw;
        for row in 0..k {
            let e = if row == col { 1.0 } else { 0.0 };
            u[(row, col - 1)] = e - coef * w[row];
        }
    }
    // sign-normalize each column: first entry with |.| > tol becomes positive
    for mut c in u.column_iter_mut() {
        if let Some(lead) = c.iter().find(|x| x.abs() > 1e-12) {
            if *lead < 0.0 {
                c.neg_mut();
            }
        }
    }
    Ok(u)
}

/// A Haar-distributed random orthogonal matrix, produced by the QR
/// decomposition of an i.i.d. Gaussian matrix with the R-diagonal sign fix.
pub fn haar_orthogonal<R: Rng>(dim: usize, rng: &mut R) -> Matrix {
    if dim == 0 {
        return Matrix::zeros(0, 0);
    }
    let g = Matrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r_diag: Vec<f64> = (0..dim).map(|i| qr.r()[(i, i)]).collect();
    let mut q = qr.q();
    for (j, d) in r_diag.iter().enumerate() {
        if *d < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// A uniformly random permutation of `0..n`.
pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// The permutation matrix `P` with `(P x)_i = x_{perm[i]}`.
pub fn permutation_matrix(perm: &[usize]) -> Matrix {
    let n = perm.len();
    Matrix::from_fn(n, n, |i, j| if perm[i] == j { 1.0 } else { 0.0 })
}

/// Max deviation of `Q^T Q` from the identity. For rectangular `Q` this
/// checks column orthonormality.
pub fn orthogonality_defect(q: &Matrix) -> f64 {
    (q.tr_mul(q) - Matrix::identity(q.ncols(), q.ncols())).abs().max()
}
