//! Fit-and-validate pipeline for matrix-variate data: estimate the row
//! correlation and column AR(1) parameter from the first fold,
//! hierarchically cluster the rows, and pick the cluster count that
//! maximizes the conditional log-likelihood of the second fold given the
//! first.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{general_decompose_with, make_plan_dependent};
use crate::error::{Error, Result};
use crate::inference::{project_correlation_pd, sample_rowcov};
use crate::laws::DiagonalizedPair;
use crate::linalg::{mat_of_vec, rng_from_seed, sample_matrix_normal_with, vec_of_mat, CovModel, Matrix, Vector};

/// A full agglomerative merge history over `a` items.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterPath {
    pub a: usize,
    /// `(cluster_x, cluster_y, distance)` per merge, in merge order, where
    /// cluster indices refer to the labeling at the time of the merge
    /// (initial clusters are `0..a`, merge `m` creates cluster `a + m`).
    pub merges: Vec<(usize, usize, f64)>,
}

impl ClusterPath {
    /// Cluster assignments when exactly `h` clusters remain. Labels are
    /// `0..h` in order of first appearance by row index.
    pub fn assignments(&self, h: usize) -> Result<Vec<usize>> {
        if h == 0 || h > self.a {
            return Err(Error::InvalidParameter(format!(
                "cluster count must lie in 1..={}, got {h}",
                self.a
            )));
        }
        // replay merges until h clusters remain
        let mut parent: Vec<usize> = (0..self.a + self.merges.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let take = self.a - h;
        for (m, &(x, y, _)) in self.merges.iter().take(take).enumerate() {
            let new_id = self.a + m;
            let rx = find(&mut parent, x);
            let ry = find(&mut parent, y);
            parent[rx] = new_id;
            parent[ry] = new_id;
        }
        let mut label_of_root: std::collections::HashMap<usize, usize> =
            std::collections::HashMap::new();
        let mut next = 0usize;
        let mut out = Vec::with_capacity(self.a);
        for i in 0..self.a {
            let root = find(&mut parent, i);
            let label = *label_of_root.entry(root).or_insert_with(|| {
                let l = next;
                next += 1;
                l
            });
            out.push(label);
        }
        Ok(out)
    }
}

/// Linkage rule for merging cluster distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linkage {
    Average,
    Single,
    Complete,
}

/// Agglomerative clustering over the dissimilarity `1 - Delta_hat[i, j]`
/// with the requested linkage (average by default in the pipeline). Ties in
/// the nearest pair break lexicographically.
#[allow(clippy::needless_range_loop)]
pub fn hier_cluster(delta_hat: &Matrix, linkage: Linkage) -> Result<ClusterPath> {
    let a = delta_hat.nrows();
    if delta_hat.ncols() != a || a == 0 {
        return Err(Error::Dimension("correlation matrix must be square and non-empty".into()));
    }
    // active cluster list: (id, members)
    let mut active: Vec<(usize, Vec<usize>)> = (0..a).map(|i| (i, vec![i])).collect();
    let mut dist = vec![vec![0.0f64; a]; a];
    #[allow(clippy::needless_range_loop)]
    for i in 0..a {
        for j in 0..a {
            dist[i][j] = 1.0 - delta_hat[(i, j)];
        }
    }
    // current pairwise distances between active clusters, indexed by
    // position in `active`
    let mut d: Vec<Vec<f64>> = (0..a)
        .map(|i| (0..a).map(|j| dist[i][j]).collect())
        .collect();
    let mut merges = Vec::with_capacity(a.saturating_sub(1));
    let mut next_id = a;
    while active.len() > 1 {
        let n = active.len();
        let mut best = (0usize, 1usize, f64::INFINITY);
        for i in 0..n {
            for j in (i + 1)..n {
                if d[i][j] < best.2 {
                    best = (i, j, d[i][j]);
                }
            }
        }
        let (bi, bj, bd) = best;
        let (id_i, members_i) = active[bi].clone();
        let (id_j, members_j) = active[bj].clone();
        merges.push((id_i, id_j, bd));
        // linkage update against every other active cluster
        let mut new_row = Vec::with_capacity(n - 2);
        for k in 0..n {
            if k == bi || k == bj {
                continue;
            }
            let dik = d[bi.min(k)][bi.max(k)];
            let djk = d[bj.min(k)][bj.max(k)];
            let merged = match linkage {
                Linkage::Average => {
                    let (wi, wj) = (members_i.len() as f64, members_j.len() as f64);
                    (wi * dik + wj * djk) / (wi + wj)
                }
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
            };
            new_row.push(merged);
        }
        // rebuild the active set with the merged cluster appended
        let mut new_active = Vec::with_capacity(n - 1);
        let mut keep_indices = Vec::with_capacity(n - 2);
        for (k, entry) in active.iter().enumerate() {
            if k != bi && k != bj {
                new_active.push(entry.clone());
                keep_indices.push(k);
            }
        }
        let mut members = members_i;
        members.extend(members_j);
        new_active.push((next_id, members));
        next_id += 1;
        let m = new_active.len();
        let mut nd = vec![vec![0.0f64; m]; m];
        for x in 0..m - 1 {
            for y in (x + 1)..m - 1 {
                let (ox, oy) = (keep_indices[x], keep_indices[y]);
                nd[x][y] = d[ox.min(oy)][ox.max(oy)];
                nd[y][x] = nd[x][y];
            }
        }
        for (x, val) in new_row.iter().enumerate() {
            nd[x][m - 1] = *val;
            nd[m - 1][x] = *val;
        }
        active = new_active;
        d = nd;
    }
    Ok(ClusterPath { a, merges })
}

/// Estimates recovered from the first fold of a decomposed matrix-variate
/// observation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovEstimates {
    pub delta_hat: Matrix,
    pub rho_hat: f64,
    /// Whether the raw row-covariance back-projection needed its negative
    /// eigenvalues floored.
    pub eigenvalue_floored: bool,
}

/// Estimate `(Delta_hat, rho_hat)` from the vectorized first fold of a
/// two-fold decomposition with `Sigma' = I`:
///
/// 1. reshape into `a x b` and form the uncentered sample row covariance `S`;
/// 2. back out `Delta* = (S - (1 - q1^2) I) / q1^2`, flooring any negative
///    eigenvalues at 0.1, and normalize to a correlation matrix;
/// 3. fit `rho` by maximizing the summed per-row Kalman-filter likelihood of
///    a latent stationary AR(1) (unit marginal variance) observed with
///    loading `q1` and emission variance `1 - q1^2`, treating rows as
///    independent.
pub fn estimate_delta_rho(x1: &Vector, q1: f64, a: usize, b: usize) -> Result<CovEstimates> {
    if !(0.0 < q1 && q1 < 1.0) {
        return Err(Error::InvalidParameter(format!("q1 must lie in (0, 1), got {q1}")));
    }
    let ym = mat_of_vec(x1, a, b)?;
    let s = sample_rowcov(&ym)?;
    let q1sq = q1 * q1;
    let delta_star = (s - Matrix::identity(a, a) * (1.0 - q1sq)) / q1sq;

    let eig = nalgebra::SymmetricEigen::new(delta_star.clone());
    let floored = eig.eigenvalues.iter().any(|&v| v < 0.0);
    let delta_psd = if floored {
        let vals = eig.eigenvalues.map(|v| if v < 0.0 { 0.1 } else { v });
        let scaled = Matrix::from_fn(a, a, |i, j| eig.eigenvectors[(i, j)] * vals[j]);
        &scaled * eig.eigenvectors.transpose()
    } else {
        delta_star
    };
    let mut delta_hat = delta_psd.clone();
    let d: Vec<f64> = (0..a).map(|i| delta_psd[(i, i)].max(1e-12).sqrt()).collect();
    for i in 0..a {
        for j in 0..a {
            delta_hat[(i, j)] /= d[i] * d[j];
        }
    }
    for i in 0..a {
        delta_hat[(i, i)] = 1.0;
    }

    let rho_hat = fit_rho_kalman(&ym, q1)?;
    Ok(CovEstimates { delta_hat, rho_hat, eigenvalue_floored: floored })
}

/// Maximize the summed row-wise Kalman likelihood over `rho` by
/// golden-section search on (0, 1).
fn fit_rho_kalman(ym: &Matrix, q1: f64) -> Result<f64> {
    let emission_var = 1.0 - q1 * q1;
    let mut neg_ll = |rho: f64| -> Result<f64> {
        Ok(-kalman_log_lik(ym, rho, q1, emission_var))
    };
    let (rho, _) = crate::fisher::golden_section_min(&mut neg_ll, 1e-4, 1.0 - 1e-4, 1e-8)?;
    Ok(rho)
}

/// Log-likelihood of all rows under the state-space model
/// `alpha_t = rho alpha_{t-1} + eta_t` (stationary, unit marginal variance),
/// `y_t = q1 alpha_t + e_t`, `e_t ~ N(0, emission_var)`.
fn kalman_log_lik(ym: &Matrix, rho: f64, q1: f64, emission_var: f64) -> f64 {
    const LN_2PI: f64 = 1.8378770664093453;
    let (a, b) = (ym.nrows(), ym.ncols());
    let innovation_var = 1.0 - rho * rho;
    let mut total = 0.0;
    for u in 0..a {
        // stationary initialization
        let mut pred_mean = 0.0;
        let mut pred_var = 1.0;
        for t in 0..b {
            let y = ym[(u, t)];
            let obs_var = q1 * q1 * pred_var + emission_var;
            let resid = y - q1 * pred_mean;
            total += -0.5 * (LN_2PI + obs_var.ln() + resid * resid / obs_var);
            // update
            let gain = pred_var * q1 / obs_var;
            let filt_mean = pred_mean + gain * resid;
            let filt_var = pred_var * (1.0 - gain * q1);
            // propagate
            pred_mean = rho * filt_mean;
            pred_var = rho * rho * filt_var + innovation_var;
        }
    }
    total
}

/// The conditional log-likelihood curve over cluster counts and its argmax.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationCurve {
    /// `(h, conditional log-likelihood)` for `h = 1..=a`.
    pub points: Vec<(usize, f64)>,
    pub best_h: usize,
    pub best_cll: f64,
    /// Cluster counts whose thresholded matrix needed a PD repair.
    pub repaired: Vec<usize>,
    /// Set when a repair moved the matrix by more than a tenth of its norm.
    pub large_repair: bool,
}

/// Everything needed to evaluate the validation-fold conditional likelihood.
#[derive(Debug, Clone)]
pub struct ValidationData {
    pub x1: Vector,
    pub x2: Vector,
    pub q1: f64,
    pub q2: f64,
    /// Standard deviation of the isotropic auxiliary noise.
    pub sigma_prime: f64,
    pub a: usize,
    pub b: usize,
}

/// Zero the between-cluster entries of `delta_hat` for the given assignment;
/// entries within a cluster are untouched.
pub fn zero_between_clusters(delta_hat: &Matrix, assignment: &[usize]) -> Matrix {
    let a = delta_hat.nrows();
    Matrix::from_fn(a, a, |i, j| {
        if assignment[i] == assignment[j] {
            delta_hat[(i, j)]
        } else {
            0.0
        }
    })
}

/// Evaluate the conditional log-likelihood of the second fold given the
/// first for every cluster count `h`, zeroing between-cluster correlation
/// entries (with PD repair when the zeroing breaks definiteness), and return
/// the maximizing `h`.
pub fn select_clusters(
    path: &ClusterPath,
    delta_hat: &Matrix,
    rho_hat: f64,
    data: &ValidationData,
) -> Result<ValidationCurve> {
    let a = path.a;
    if delta_hat.nrows() != a {
        return Err(Error::Dimension("cluster path and Delta_hat sizes differ".into()));
    }
    let frob_ref = delta_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut points = Vec::with_capacity(a);
    let mut repaired = Vec::new();
    let mut large_repair = false;
    for h in 1..=a {
        let assignment = path.assignments(h)?;
        let zeroed = zero_between_clusters(delta_hat, &assignment);
        let candidate = project_correlation_pd(&zeroed, 1e-6);
        let repair_norm = (&candidate - &zeroed).iter().map(|v| v * v).sum::<f64>().sqrt();
        if repair_norm > 1e-10 {
            repaired.push(h);
            if repair_norm > 0.1 * frob_ref {
                large_repair = true;
            }
        }
        let sigma_star = CovModel::kronecker(
            CovModel::ar1(rho_hat, data.b)?,
            CovModel::dense(candidate)?,
        );
        let pair = DiagonalizedPair::new(
            &Vector::zeros(a * data.b),
            &sigma_star,
            data.sigma_prime,
            data.q1,
            data.q2,
        )?;
        let cll = pair.conditional_log_density(&data.x1, &data.x2)?;
        points.push((h, cll));
    }
    let (best_h, best_cll) = points
        .iter()
        .copied()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or_else(|| Error::Numerical("empty validation curve".into()))?;
    Ok(ValidationCurve { points, best_h, best_cll, repaired, large_repair })
}

/// Configuration for the synthetic block-recovery experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockExperimentConfig {
    /// Rows per block; the total row count is the sum.
    pub blocks: Vec<usize>,
    /// Within-block correlation.
    pub within_corr: f64,
    pub b: usize,
    pub rho: f64,
    pub q1: f64,
    pub replicates: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockExperimentOutput {
    pub selected_counts: Vec<usize>,
    /// Fraction of replicates whose selected cluster count equals the true
    /// block count.
    pub recovery_rate: f64,
    pub true_blocks: usize,
    pub curves: Vec<ValidationCurve>,
}

/// Build the block-diagonal correlation truth for the experiment.
pub fn block_delta(blocks: &[usize], within_corr: f64) -> Result<Matrix> {
    if !(0.0 < within_corr && within_corr < 1.0) {
        return Err(Error::InvalidParameter("within-block correlation must lie in (0, 1)".into()));
    }
    let a: usize = blocks.iter().sum();
    let mut delta = Matrix::identity(a, a);
    let mut start = 0;
    for &size in blocks {
        for i in start..start + size {
            for j in start..start + size {
                if i != j {
                    delta[(i, j)] = within_corr;
                }
            }
        }
        start += size;
    }
    Ok(delta)
}

/// Run the synthetic experiment: draw matrix-variate data with a
/// block-correlation truth, decompose, estimate, cluster, and validate; one
/// selected cluster count per replicate.
pub fn run_block_experiment(cfg: &BlockExperimentConfig) -> Result<BlockExperimentOutput> {
    let a: usize = cfg.blocks.iter().sum();
    if a < 2 || cfg.b < 2 {
        return Err(Error::Config("need at least 2 rows and 2 columns".into()));
    }
    if !(0.0 < cfg.q1 && cfg.q1 < 1.0) {
        return Err(Error::Config("q1 must lie in (0, 1)".into()));
    }
    if !(0.0 < cfg.rho && cfg.rho < 1.0) {
        return Err(Error::Config("rho must lie in (0, 1)".into()));
    }
    let delta_true = block_delta(&cfg.blocks, cfg.within_corr)?;
    let results: Result<Vec<ValidationCurve>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|idx| {
            let seed = cfg.base_seed.wrapping_add(idx as u64);
            run_block_replicate(cfg, &delta_true, a, seed)
        })
        .collect();
    let curves = results?;
    let selected_counts: Vec<usize> = curves.iter().map(|c| c.best_h).collect();
    let hits = selected_counts.iter().filter(|&&h| h == cfg.blocks.len()).count();
    Ok(BlockExperimentOutput {
        recovery_rate: hits as f64 / selected_counts.len().max(1) as f64,
        selected_counts,
        true_blocks: cfg.blocks.len(),
        curves,
    })
}

fn run_block_replicate(
    cfg: &BlockExperimentConfig,
    delta_true: &Matrix,
    a: usize,
    seed: u64,
) -> Result<ValidationCurve> {
    let mut rng = rng_from_seed(seed);
    let x = sample_matrix_normal_with(
        &Matrix::zeros(a, cfg.b),
        &CovModel::dense(delta_true.clone())?,
        &CovModel::ar1(cfg.rho, cfg.b)?,
        &mut rng,
    )?;
    let q2 = (1.0 - cfg.q1 * cfg.q1).sqrt();
    let plan = make_plan_dependent(1, 2, &Vector::from_vec(vec![cfg.q1, q2]), seed)?;
    let vx = vec_of_mat(&x);
    let row = Matrix::from_fn(1, vx.len(), |_, j| vx[j]);
    let sigma_p = CovModel::isotropic(1.0, vx.len())?;
    let fs = general_decompose_with(&row, &plan, &sigma_p, &mut rng)?;
    let x1 = fs.fold_vector(0)?;
    let x2 = fs.fold_vector(1)?;

    let est = estimate_delta_rho(&x1, cfg.q1, a, cfg.b)?;
    let path = hier_cluster(&est.delta_hat, Linkage::Average)?;
    let data = ValidationData { x1, x2, q1: cfg.q1, q2, sigma_prime: 1.0, a, b: cfg.b };
    select_clusters(&path, &est.delta_hat, est.rho_hat, &data)
}
