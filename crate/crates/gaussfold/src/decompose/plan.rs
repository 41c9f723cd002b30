//! Orthogonal decomposition plans: the matrix `Q`, the noise augmentation
//! count, the data/noise interleaving, and the fold partition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{haar_orthogonal, orth_complete, orthogonality_defect, permutation_matrix, random_permutation, rng_from_seed, Matrix, Vector};

/// Where a row of the augmented matrix comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", content = "index", rename_all = "kebab-case")]
pub enum RowSource {
    Data(usize),
    Noise(usize),
}

/// Which named decomposition strategy a plan realizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlanKind {
    SampleSplit,
    Thinning { eps: Vec<f64> },
    Fission,
    InfoPreserving,
    Block { q_col: Vec<f64> },
    Custom,
}

/// An `(n+r) x (n+r)` orthogonal matrix together with everything needed to
/// apply it to data and to undo the application exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrthogonalPlan {
    pub q: Matrix,
    pub r: usize,
    /// Source of each augmented row, in augmented-row order.
    pub interleave: Vec<RowSource>,
    /// Fold index of each row of `Q X_aug`.
    pub fold_assignment: Vec<usize>,
    /// Fold sizes `(n_1, ..., n_K)`; redundant with `fold_assignment` but kept
    /// explicit for serialization and validation.
    pub partition: Vec<usize>,
    pub kind: PlanKind,
    /// Seed used by any randomized constructor, for exact replay.
    pub seed: Option<u64>,
}

impl OrthogonalPlan {
    /// Number of data rows the plan expects.
    pub fn n(&self) -> usize {
        self.q.nrows() - self.r
    }

    /// Number of folds.
    pub fn k(&self) -> usize {
        self.partition.len()
    }

    /// Total rows after augmentation.
    pub fn total_rows(&self) -> usize {
        self.q.nrows()
    }

    /// The per-fold data coefficients `q_k` when the plan is a single-column
    /// signal mix (thinning, fission, dependent block): entry `k` is the
    /// weight of the original data in fold `k`.
    pub fn fold_coefficients(&self) -> Option<Vec<f64>> {
        match &self.kind {
            PlanKind::Thinning { eps } => Some(eps.iter().map(|e| e.sqrt()).collect()),
            PlanKind::Fission => {
                let s = 0.5_f64.sqrt();
                Some(vec![s, s])
            }
            PlanKind::Block { q_col } => Some(q_col.clone()),
            _ => None,
        }
    }

    /// Structural validation: orthogonality, partition, interleave, and
    /// fold-assignment consistency.
    pub fn validate(&self) -> Result<()> {
        let total = self.q.nrows();
        if self.q.ncols() != total {
            return Err(Error::InvalidPlan("Q must be square".into()));
        }
        if self.r >= total && total > 0 {
            return Err(Error::InvalidPlan("noise count r must be < n + r".into()));
        }
        let defect = orthogonality_defect(&self.q);
        if defect > 1e-10 {
            return Err(Error::InvalidPlan(format!(
                "Q is not orthogonal (defect {defect:.3e})"
            )));
        }
        if self.partition.iter().sum::<usize>() != total {
            return Err(Error::InvalidPlan("partition must sum to n + r".into()));
        }
        if self.partition.contains(&0) {
            return Err(Error::InvalidPlan("empty fold in partition".into()));
        }
        let n = self.n();
        let k = self.k();
        if self.r < k.saturating_sub(n) {
            return Err(Error::InvalidPlan(format!(
                "r = {} too small for {k} folds from {n} rows",
                self.r
            )));
        }
        if self.interleave.len() != total || self.fold_assignment.len() != total {
            return Err(Error::InvalidPlan("interleave/fold assignment length mismatch".into()));
        }
        let mut seen_data = vec![false; n];
        let mut seen_noise = vec![false; self.r];
        for src in &self.interleave {
            match *src {
                RowSource::Data(i) if i < n && !seen_data[i] => seen_data[i] = true,
                RowSource::Noise(j) if j < self.r && !seen_noise[j] => seen_noise[j] = true,
                _ => return Err(Error::InvalidPlan("interleave is not a valid row permutation".into())),
            }
        }
        let mut counts = vec![0usize; k];
        for &f in &self.fold_assignment {
            if f >= k {
                return Err(Error::InvalidPlan("fold assignment out of range".into()));
            }
            counts[f] += 1;
        }
        if counts != self.partition {
            return Err(Error::InvalidPlan("fold assignment does not match partition".into()));
        }
        Ok(())
    }

    /// The trivial plan: one fold equal to the data.
    pub fn identity(n: usize) -> Self {
        OrthogonalPlan {
            q: Matrix::identity(n, n),
            r: 0,
            interleave: (0..n).map(RowSource::Data).collect(),
            fold_assignment: vec![0; n],
            partition: vec![n],
            kind: PlanKind::Custom,
            seed: None,
        }
    }
}

/// A user-supplied plan with explicit metadata, validated on construction.
pub fn custom_plan(
    q: Matrix,
    r: usize,
    interleave: Vec<RowSource>,
    fold_assignment: Vec<usize>,
) -> Result<OrthogonalPlan> {
    let k = fold_assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut partition = vec![0usize; k];
    for &f in &fold_assignment {
        partition[f] += 1;
    }
    let plan = OrthogonalPlan {
        q,
        r,
        interleave,
        fold_assignment,
        partition,
        kind: PlanKind::Custom,
        seed: None,
    };
    plan.validate()?;
    Ok(plan)
}

/// Sample splitting: `Q` is a uniformly random `n x n` permutation matrix and
/// the folds are contiguous blocks of the permuted rows, i.e. a uniformly
/// random partition of the original rows into the requested sizes.
pub fn make_plan_sample_split(n: usize, sizes: &[usize], seed: u64) -> Result<OrthogonalPlan> {
    if n < 2 {
        return Err(Error::InvalidPlan(
            "sample splitting needs n > 1 independent rows".into(),
        ));
    }
    if sizes.iter().sum::<usize>() != n || sizes.contains(&0) {
        return Err(Error::InvalidPlan("fold sizes must be positive and sum to n".into()));
    }
    let mut rng = rng_from_seed(seed);
    let perm = random_permutation(n, &mut rng);
    let q = permutation_matrix(&perm);
    Ok(OrthogonalPlan {
        q,
        r: 0,
        interleave: (0..n).map(RowSource::Data).collect(),
        fold_assignment: contiguous_assignment(sizes),
        partition: sizes.to_vec(),
        kind: PlanKind::SampleSplit,
        seed: Some(seed),
    })
}

/// K-fold thinning. The K x K block has first column
/// `(sqrt(eps_1), ..., sqrt(eps_K))` completed to an orthogonal matrix; for
/// `n > 1` the plan applies that block to every row (`Q = I_n (x) Q'`) with
/// each data row followed by its `K - 1` noise rows.
pub fn make_plan_thinning(eps: &[f64], n: usize) -> Result<OrthogonalPlan> {
    validate_eps(eps)?;
    let k = eps.len();
    let first_col = Vector::from_iterator(k, eps.iter().map(|e| e.sqrt()));
    let q_block = complete_first_column(&first_col)?;
    block_plan(q_block, n, PlanKind::Thinning { eps: eps.to_vec() }, None)
}

/// Data fission: the two-fold plan with equal signal weights
/// `(1/sqrt(2), 1/sqrt(2))`, giving folds `(X + W)/sqrt(2)` and
/// `(X - W)/sqrt(2)`.
pub fn make_plan_fission(n: usize) -> Result<OrthogonalPlan> {
    let s = 0.5_f64.sqrt();
    let q_block = Matrix::from_row_slice(2, 2, &[s, s, s, -s]);
    block_plan(q_block, n, PlanKind::Fission, None)
}

/// An information-preserving rotation: a random orthogonal `Q` with
/// `Q 1_n = 1_n`, built as `V diag(1, O) V^T` where `V`'s first column is
/// `1_n / sqrt(n)` and `O` is Haar-distributed on the complement.
///
/// Rejects `n = 1`: a single multivariate Gaussian with unknown covariance
/// cannot be decomposed into independent pieces, so no such plan exists.
pub fn make_plan_info_preserving(n: usize, sizes: &[usize], seed: u64) -> Result<OrthogonalPlan> {
    if n < 2 {
        return Err(Error::SingleObservationIndependent);
    }
    if sizes.iter().sum::<usize>() != n || sizes.contains(&0) {
        return Err(Error::InvalidPlan("fold sizes must be positive and sum to n".into()));
    }
    let mut rng = rng_from_seed(seed);
    let ones = Vector::from_element(n, 1.0 / (n as f64).sqrt());
    let u = orth_complete(&ones)?;
    let v = compose_columns(&ones, &u);
    let o = haar_orthogonal(n - 1, &mut rng);
    let mut inner = Matrix::identity(n, n);
    inner.view_mut((1, 1), (n - 1, n - 1)).copy_from(&o);
    let q = &v * inner * v.transpose();
    Ok(OrthogonalPlan {
        q,
        r: 0,
        interleave: (0..n).map(RowSource::Data).collect(),
        fold_assignment: contiguous_assignment(sizes),
        partition: sizes.to_vec(),
        kind: PlanKind::InfoPreserving,
        seed: Some(seed),
    })
}

/// A dependent decomposition into `K` folds: the K x K block has first column
/// `q_col` (unit norm); each fold keeps `q_col[k]` of the signal. For `K = 2`
/// the completion is deterministic, giving
/// `Q' = [[q_1, q_2], [q_2, -q_1]]`; for `K > 2` the orthogonal complement is
/// rotated by a seeded Haar draw (any completion yields the same fold laws).
pub fn make_plan_dependent(n: usize, k: usize, q_col: &Vector, seed: u64) -> Result<OrthogonalPlan> {
    if q_col.len() != k {
        return Err(Error::Dimension(format!(
            "q_col has length {} but K = {k}",
            q_col.len()
        )));
    }
    if (q_col.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "q_col must be a unit vector, got norm {}",
            q_col.norm()
        )));
    }
    let q_block = if k == 2 {
        complete_first_column(q_col)?
    } else {
        let u = orth_complete(q_col)?;
        let mut rng = rng_from_seed(seed);
        let rot = haar_orthogonal(k - 1, &mut rng);
        compose_columns(q_col, &(&u * rot))
    };
    block_plan(q_block, n, PlanKind::Block { q_col: q_col.iter().copied().collect() }, Some(seed))
}

fn validate_eps(eps: &[f64]) -> Result<()> {
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
    Ok(())
}

/// `[first | orth_complete(first)]`.
fn complete_first_column(first: &Vector) -> Result<Matrix> {
    let u = orth_complete(first)?;
    Ok(compose_columns(first, &u))
}

fn compose_columns(first: &Vector, rest: &Matrix) -> Matrix {
    let k = first.len();
    Matrix::from_fn(k, k, |i, j| if j == 0 { first[i] } else { rest[(i, j - 1)] })
}

/// Expand a K x K block to `I_n (x) Q'` with the standard interleaving:
/// data row `i` occupies augmented row `i*K`, followed by its `K - 1` noise
/// rows; fold `k` collects augmented rows `k, K + k, 2K + k, ...`.
fn block_plan(
    q_block: Matrix,
    n: usize,
    kind: PlanKind,
    seed: Option<u64>,
) -> Result<OrthogonalPlan> {
    let k = q_block.nrows();
    if n == 0 {
        return Err(Error::InvalidPlan("n must be positive".into()));
    }
    let r = n * (k - 1);
    let total = n * k;
    let q = if n == 1 {
        q_block.clone()
    } else {
        Matrix::identity(n, n).kronecker(&q_block)
    };
    let mut interleave = Vec::with_capacity(total);
    let mut fold_assignment = Vec::with_capacity(total);
    for i in 0..n {
        interleave.push(RowSource::Data(i));
        for c in 0..k - 1 {
            interleave.push(RowSource::Noise(i * (k - 1) + c));
        }
        for c in 0..k {
            fold_assignment.push(c);
        }
    }
    let plan = OrthogonalPlan {
        q,
        r,
        interleave,
        fold_assignment,
        partition: vec![n; k],
        kind,
        seed,
    };
    plan.validate()?;
    Ok(plan)
}

fn contiguous_assignment(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.iter().sum());
    for (fold, &s) in sizes.iter().enumerate() {
        out.extend(std::iter::repeat_n(fold, s));
    }
    out
}
