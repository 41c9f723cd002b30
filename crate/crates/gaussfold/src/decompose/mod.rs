//! The general decomposition: augment the data with Gaussian noise rows,
//! premultiply by an orthogonal matrix, and partition the rows into folds.
//! Every named strategy (sample splitting, K-fold thinning, fission,
//! information-preserving rotations, dependent blocks) is a plan for this one
//! operation.

mod plan;

pub use plan::{
    custom_plan, make_plan_dependent, make_plan_fission, make_plan_info_preserving,
    make_plan_sample_split, make_plan_thinning, OrthogonalPlan, PlanKind, RowSource,
};

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::linalg::{rng_from_seed, sample_mvn_rows, CovModel, Matrix, Vector};

/// The output of a decomposition: the folds plus everything needed to
/// reconstruct the input exactly.
#[derive(Debug, Clone)]
pub struct FoldSet {
    pub folds: Vec<Matrix>,
    pub plan: OrthogonalPlan,
    pub sigma_prime: CovModel,
    pub n: usize,
    pub p: usize,
}

impl FoldSet {
    pub fn fold(&self, k: usize) -> &Matrix {
        &self.folds[k]
    }

    /// Fold `k` as a vector; only meaningful when the fold has one row.
    pub fn fold_vector(&self, k: usize) -> Result<Vector> {
        if self.folds[k].nrows() != 1 {
            return Err(Error::Dimension(format!(
                "fold {k} has {} rows, expected 1",
                self.folds[k].nrows()
            )));
        }
        Ok(self.folds[k].row(0).transpose())
    }

    /// Reassemble the premultiplied matrix `X' = Q X_aug` from the folds.
    pub fn stacked(&self) -> Matrix {
        let total = self.plan.total_rows();
        let mut out = Matrix::zeros(total, self.p);
        let mut cursor = vec![0usize; self.plan.k()];
        for (row, &fold) in self.plan.fold_assignment.iter().enumerate() {
            let within = cursor[fold];
            out.set_row(row, &self.folds[fold].row(within));
            cursor[fold] += 1;
        }
        out
    }
}

/// Decompose `x` into folds: draw `r` noise rows from `N_p(0, sigma_prime)`,
/// interleave them with the data per the plan, premultiply by `Q`, and split
/// the rows into folds. Deterministic given the seed.
pub fn general_decompose(
    x: &Matrix,
    plan: &OrthogonalPlan,
    sigma_prime: &CovModel,
    seed: u64,
) -> Result<FoldSet> {
    let mut rng = rng_from_seed(seed);
    general_decompose_with(x, plan, sigma_prime, &mut rng)
}

/// Decomposition driven by a live RNG stream (replicated simulations share
/// one stream per replicate).
pub fn general_decompose_with<R: Rng>(
    x: &Matrix,
    plan: &OrthogonalPlan,
    sigma_prime: &CovModel,
    rng: &mut R,
) -> Result<FoldSet> {
    plan.validate()?;
    let n = plan.n();
    let p = x.ncols();
    if x.nrows() != n {
        return Err(Error::Dimension(format!(
            "plan expects {n} data rows, matrix has {}",
            x.nrows()
        )));
    }
    if sigma_prime.dim() != p {
        return Err(Error::Dimension(format!(
            "sigma_prime has dimension {}, data has {p} columns",
            sigma_prime.dim()
        )));
    }
    let noise = sample_mvn_rows(sigma_prime, plan.r, rng)?;
    let total = plan.total_rows();
    let mut aug = Matrix::zeros(total, p);
    for (row, src) in plan.interleave.iter().enumerate() {
        match *src {
            RowSource::Data(i) => aug.set_row(row, &x.row(i)),
            RowSource::Noise(j) => aug.set_row(row, &noise.row(j)),
        }
    }
    let xprime = &plan.q * aug;
    let mut folds: Vec<Matrix> = plan
        .partition
        .iter()
        .map(|&nk| Matrix::zeros(nk, p))
        .collect();
    let mut cursor = vec![0usize; plan.k()];
    for (row, &fold) in plan.fold_assignment.iter().enumerate() {
        let within = cursor[fold];
        folds[fold].set_row(within, &xprime.row(row));
        cursor[fold] += 1;
    }
    Ok(FoldSet { folds, plan: plan.clone(), sigma_prime: sigma_prime.clone(), n, p })
}

/// Undo a decomposition exactly: premultiply the stacked folds by `Q^T` and
/// select the data rows.
pub fn reconstruct(fs: &FoldSet) -> Result<Matrix> {
    fs.plan.validate()?;
    let xprime = fs.stacked();
    let aug = fs.plan.q.tr_mul(&xprime);
    let mut x = Matrix::zeros(fs.n, fs.p);
    for (row, src) in fs.plan.interleave.iter().enumerate() {
        if let RowSource::Data(i) = *src {
            x.set_row(i, &aug.row(row));
        }
    }
    Ok(x)
}

/// Decompose a single squared deviation into `K` independent Gamma folds:
/// draw `Z ~ Dirichlet(eps_1/2, ..., eps_K/2)` and return `(x - mu)^2 * Z`.
/// Fold `k` is marginally `Gamma(eps_k / 2, rate 1/(2 sigma^2))` and the
/// folds always sum to `(x - mu)^2`.
pub fn gamma_dirichlet_thin(x: f64, mu: f64, eps: &[f64], seed: u64) -> Result<Vec<f64>> {
    if eps.is_empty() {
        return Err(Error::InvalidParameter("eps must be non-empty".into()));
    }
    if eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter("eps entries must be positive".into()));
    }
    let total: f64 = eps.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("eps must sum to 1, got {total}")));
    }
    let s = (x - mu) * (x - mu);
    let mut rng = rng_from_seed(seed);
    // Dirichlet via normalized Gamma draws
    let mut gammas = Vec::with_capacity(eps.len());
    for &e in eps {
        let g = Gamma::new(e / 2.0, 1.0)
            .map_err(|e| Error::InvalidParameter(format!("gamma shape: {e}")))?;
        gammas.push(g.sample(&mut rng));
    }
    let z_total: f64 = gammas.iter().sum();
    if z_total <= 0.0 {
        return Err(Error::Numerical("degenerate Dirichlet draw".into()));
    }
    Ok(gammas.into_iter().map(|g| s * (g / z_total)).collect())
}
