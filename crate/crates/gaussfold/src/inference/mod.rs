//! Selective inference for the largest off-diagonal entry of a
//! matrix-variate row covariance: selection, likelihood-ratio tests with
//! naive / marginal / conditional likelihoods, and the replicated simulation
//! driver.

pub mod corr_param;
pub mod optimize;
pub mod simulate;
pub mod stats;

pub use optimize::{OptimOptions, OptimResult};
pub use simulate::{simulate, MethodSummary, ReplicateRow, Setting, SimOutput, SimulateParams};

use serde::{Deserialize, Serialize};

use crate::decompose::FoldSet;
use crate::error::{Error, Result};
use crate::linalg::{mat_of_vec, CovModel, Matrix, Vector};
use corr_param::{corr_from_unconstrained, logistic, logit, unconstrained_from_corr};

const LN_2PI: f64 = 1.8378770664093453;
/// L2 penalty weight approximating the zero constraint on the selected entry.
pub const NULL_PENALTY: f64 = 500_000.0;

/// A zero-mean matrix-variate Gaussian with correlation row-covariance and
/// first-order autoregressive column covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixNormalModel {
    pub a: usize,
    pub b: usize,
    /// Row covariance: symmetric positive definite with unit diagonal.
    pub delta: Matrix,
    /// Column AR(1) parameter in (0, 1).
    pub rho: f64,
}

impl MatrixNormalModel {
    pub fn identity(a: usize, b: usize, rho: f64) -> Result<Self> {
        if !(0.0 < rho && rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {rho}")));
        }
        Ok(MatrixNormalModel { a, b, delta: Matrix::identity(a, a), rho })
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta.nrows() != self.a || self.delta.ncols() != self.a {
            return Err(Error::Dimension("Delta dimension mismatch".into()));
        }
        if !(0.0 < self.rho && self.rho < 1.0) {
            return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        for i in 0..self.a {
            if (self.delta[(i, i)] - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidParameter("Delta must have unit diagonal".into()));
            }
        }
        Ok(())
    }
}

/// Inference method: naive (reuse the data), marginal (ignore fold
/// dependence), conditional (account for it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "a")]
    Naive,
    #[serde(rename = "b")]
    Marginal,
    #[serde(rename = "c")]
    Conditional,
}

impl Method {
    pub fn letter(&self) -> &'static str {
        match self {
            Method::Naive => "a",
            Method::Marginal => "b",
            Method::Conditional => "c",
        }
    }
}

/// Where a selection came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionSource {
    FullData,
    Fold1,
}

/// The selected off-diagonal entry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SelectionResult {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub source: SelectionSource,
}

/// Uncentered sample row-covariance `(1/b) sum_j col_j col_j^T` (the mean is
/// known to be zero in this model). Pass `centered = true` to subtract the
/// per-row means first.
pub fn sample_rowcov_with(xm: &Matrix, centered: bool) -> Result<Matrix> {
    let (a, b) = (xm.nrows(), xm.ncols());
    if b < 2 {
        return Err(Error::Dimension("row covariance needs at least two columns".into()));
    }
    let data = if centered {
        let mut c = xm.clone();
        for u in 0..a {
            let m: f64 = xm.row(u).iter().sum::<f64>() / b as f64;
            for t in 0..b {
                c[(u, t)] -= m;
            }
        }
        c
    } else {
        xm.clone()
    };
    Ok(&data * data.transpose() / b as f64)
}

pub fn sample_rowcov(xm: &Matrix) -> Result<Matrix> {
    sample_rowcov_with(xm, false)
}

/// The off-diagonal entry of largest magnitude; ties break to the smallest
/// `(i, j)` in lexicographic order.
pub fn select_entry(delta_hat: &Matrix) -> Result<SelectionResult> {
    let a = delta_hat.nrows();
    if a < 2 {
        return Err(Error::Dimension("selection needs at least a 2 x 2 matrix".into()));
    }
    let mut best = (0usize, 1usize, delta_hat[(0, 1)]);
    for i in 0..a {
        for j in (i + 1)..a {
            if delta_hat[(i, j)].abs() > best.2.abs() {
                best = (i, j, delta_hat[(i, j)]);
            }
        }
    }
    Ok(SelectionResult { i: best.0, j: best.1, value: best.2, source: SelectionSource::FullData })
}

/// Which likelihood a fit maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodKind {
    /// The full data `X`.
    Full,
    /// The marginal law of the second fold.
    FoldMarginal,
    /// The conditional law of the second fold given the first.
    FoldConditional,
}

/// The matrix-normal log-likelihood functional, diagonalized through the
/// factor eigendecompositions and memoized so coordinate-wise
/// finite-difference probes only recompute the factor that moved.
pub struct MatnormObjective {
    kind: LikelihoodKind,
    a: usize,
    b: usize,
    q1: f64,
    q2: f64,
    sigma_p2: f64,
    data1: Option<Matrix>,
    data2: Option<Matrix>,
    penalty: Option<(usize, usize, f64)>,
    gamma_cache: Option<GammaCache>,
    delta_cache: Option<DeltaCache>,
}

struct GammaCache {
    rho: f64,
    eigs: Vector,
    ln_eig_sum: f64,
    /// Each data matrix postmultiplied by the eigenvector matrix.
    xp: Vec<Matrix>,
}

struct DeltaCache {
    key: Vec<f64>,
    delta: Matrix,
    r: Matrix,
    eigs: Vector,
    min_eig: f64,
    ln_eig_sum: f64,
}

impl MatnormObjective {
    /// Full-data likelihood of `X ~ N_{a x b}(0, Delta, Gamma(rho))`.
    pub fn full(x: &Matrix) -> Result<Self> {
        let (a, b) = (x.nrows(), x.ncols());
        if a < 2 || b < 2 {
            return Err(Error::Dimension("need at least 2 rows and 2 columns".into()));
        }
        Ok(MatnormObjective {
            kind: LikelihoodKind::Full,
            a,
            b,
            q1: 1.0,
            q2: 0.0,
            sigma_p2: 1.0,
            data1: Some(x.clone()),
            data2: None,
            penalty: None,
            gamma_cache: None,
            delta_cache: None,
        })
    }

    /// Marginal likelihood of the second fold of a two-fold dependent
    /// decomposition with isotropic auxiliary noise.
    pub fn fold_marginal(y2: Matrix, q1: f64, q2: f64, sigma_p2: f64) -> Result<Self> {
        let (a, b) = (y2.nrows(), y2.ncols());
        check_coeffs(q1, q2, sigma_p2)?;
        Ok(MatnormObjective {
            kind: LikelihoodKind::FoldMarginal,
            a,
            b,
            q1,
            q2,
            sigma_p2,
            data1: None,
            data2: Some(y2),
            penalty: None,
            gamma_cache: None,
            delta_cache: None,
        })
    }

    /// Conditional likelihood of the second fold given the first.
    pub fn fold_conditional(y1: Matrix, y2: Matrix, q1: f64, q2: f64, sigma_p2: f64) -> Result<Self> {
        if y1.shape() != y2.shape() {
            return Err(Error::Dimension("fold matrices have different shapes".into()));
        }
        let (a, b) = y1.shape();
        check_coeffs(q1, q2, sigma_p2)?;
        Ok(MatnormObjective {
            kind: LikelihoodKind::FoldConditional,
            a,
            b,
            q1,
            q2,
            sigma_p2,
            data1: Some(y1),
            data2: Some(y2),
            penalty: None,
            gamma_cache: None,
            delta_cache: None,
        })
    }

    /// Add the squared penalty on the selected entry for penalized-null fits.
    pub fn with_penalty(mut self, i: usize, j: usize, weight: f64) -> Self {
        self.penalty = Some((i, j, weight));
        self
    }

    pub fn dim(&self) -> usize {
        1 + corr_param::angle_count(self.a)
    }

    /// Pack a model into unconstrained optimizer coordinates.
    pub fn pack(&self, model: &MatrixNormalModel) -> Result<Vector> {
        let mut x = Vec::with_capacity(self.dim());
        x.push(logit(model.rho));
        x.extend(unconstrained_from_corr(&model.delta)?);
        Ok(Vector::from_vec(x))
    }

    /// Decode optimizer coordinates back into a model.
    pub fn unpack(&self, params: &Vector) -> Result<MatrixNormalModel> {
        let rho = logistic(params[0]).clamp(1e-6, 1.0 - 1e-6);
        let delta = corr_from_unconstrained(&params.as_slice()[1..], self.a)?;
        Ok(MatrixNormalModel { a: self.a, b: self.b, delta, rho })
    }

    /// Penalized objective at unconstrained coordinates.
    pub fn eval(&mut self, params: &Vector) -> Result<f64> {
        self.eval_inner(params, true)
    }

    /// Raw log-likelihood (no penalty) at unconstrained coordinates.
    pub fn eval_raw(&mut self, params: &Vector) -> Result<f64> {
        self.eval_inner(params, false)
    }

    /// Raw log-likelihood of a model.
    pub fn log_likelihood(&mut self, model: &MatrixNormalModel) -> Result<f64> {
        let params = self.pack(model)?;
        self.eval_raw(&params)
    }

    fn eval_inner(&mut self, params: &Vector, with_penalty: bool) -> Result<f64> {
        if params.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                params.len()
            )));
        }
        let rho = logistic(params[0]).clamp(1e-6, 1.0 - 1e-6);
        self.refresh_gamma(rho)?;
        self.refresh_delta(&params.as_slice()[1..])?;

        let gamma = self.gamma_cache.as_ref().unwrap();
        let delta = self.delta_cache.as_ref().unwrap();

        // rotate each cached (data * P) by R^T
        let z: Vec<Matrix> = gamma.xp.iter().map(|xp| delta.r.tr_mul(xp)).collect();
        let (a, b) = (self.a, self.b);
        let n_terms = (a * b) as f64;

        let ll = match self.kind {
            LikelihoodKind::Full => {
                if delta.min_eig <= 1e-300 {
                    return Ok(f64::NEG_INFINITY);
                }
                let z0 = &z[0];
                let mut quad = 0.0;
                for i in 0..b {
                    for k in 0..a {
                        quad += z0[(k, i)] * z0[(k, i)] / (delta.eigs[k] * gamma.eigs[i]);
                    }
                }
                let ln_det = a as f64 * gamma.ln_eig_sum + b as f64 * delta.ln_eig_sum;
                -0.5 * (n_terms * LN_2PI + ln_det + quad)
            }
            LikelihoodKind::FoldMarginal => {
                let z2 = &z[0];
                let q2sq = self.q2 * self.q2;
                let mut acc = 0.0;
                for i in 0..b {
                    for k in 0..a {
                        let v = q2sq * delta.eigs[k] * gamma.eigs[i] + (1.0 - q2sq) * self.sigma_p2;
                        acc += v.ln() + z2[(k, i)] * z2[(k, i)] / v;
                    }
                }
                -0.5 * (n_terms * LN_2PI + acc)
            }
            LikelihoodKind::FoldConditional => {
                if delta.min_eig <= 1e-300 {
                    return Ok(f64::NEG_INFINITY);
                }
                let z1 = &z[0];
                let z2 = &z[1];
                let (q1, q2) = (self.q1, self.q2);
                let q1sq = q1 * q1;
                let mut acc = 0.0;
                for i in 0..b {
                    for k in 0..a {
                        let lam = delta.eigs[k] * gamma.eigs[i];
                        let v1 = q1sq * lam + (1.0 - q1sq) * self.sigma_p2;
                        let g = q1 * q2 * (lam - self.sigma_p2) / v1;
                        let cv = lam * self.sigma_p2 / v1;
                        let d = z2[(k, i)] - g * z1[(k, i)];
                        acc += cv.ln() + d * d / cv;
                    }
                }
                -0.5 * (n_terms * LN_2PI + acc)
            }
        };

        if with_penalty {
            if let Some((i, j, w)) = self.penalty {
                let dij = delta.delta[(i, j)];
                return Ok(ll - w * dij * dij);
            }
        }
        Ok(ll)
    }

    fn refresh_gamma(&mut self, rho: f64) -> Result<()> {
        if let Some(c) = &self.gamma_cache {
            if c.rho == rho {
                return Ok(());
            }
        }
        let (basis, eigs) = CovModel::ar1(rho, self.b)?.spectral()?;
        let p = match basis {
            crate::linalg::SpectralBasis::Dense { p } => p,
            other => other.materialize(),
        };
        let mut xp = Vec::new();
        for d in [&self.data1, &self.data2].into_iter().flatten() {
            xp.push(d * &p);
        }
        let ln_eig_sum = eigs.iter().map(|v| v.ln()).sum();
        self.gamma_cache = Some(GammaCache { rho, eigs, ln_eig_sum, xp });
        Ok(())
    }

    fn refresh_delta(&mut self, key: &[f64]) -> Result<()> {
        if let Some(c) = &self.delta_cache {
            if c.key == key {
                return Ok(());
            }
        }
        let delta = corr_from_unconstrained(key, self.a)?;
        let eig = nalgebra::SymmetricEigen::try_new(delta.clone(), 1e-13, 0)
            .ok_or_else(|| Error::Eigen("row-covariance eigensolver failed".into()))?;
        // candidates on the boundary of the correlation cone are handled per
        // likelihood: the fold marginal stays finite there, the others
        // diverge to -inf
        let eigs = eig.eigenvalues.map(|v| v.max(0.0));
        let min_eig = eigs.min();
        let ln_eig_sum = if min_eig > 0.0 { eigs.iter().map(|v| v.ln()).sum() } else { f64::NEG_INFINITY };
        self.delta_cache = Some(DeltaCache {
            key: key.to_vec(),
            delta,
            r: eig.eigenvectors,
            eigs,
            min_eig,
            ln_eig_sum,
        });
        Ok(())
    }
}

fn check_coeffs(q1: f64, q2: f64, sigma_p2: f64) -> Result<()> {
    if (q1 * q1 + q2 * q2 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter("fold coefficients must satisfy q1^2 + q2^2 = 1".into()));
    }
    if !(sigma_p2 > 0.0) {
        return Err(Error::InvalidParameter("auxiliary noise variance must be positive".into()));
    }
    Ok(())
}

/// A completed model fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModel {
    pub model: MatrixNormalModel,
    /// Raw log-likelihood at the optimum (penalty excluded).
    pub log_lik: f64,
    /// The maximized objective (equals `log_lik` for unpenalized fits).
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub grad_inf_norm: f64,
}

/// Maximize a likelihood functional from an initial model.
pub fn optimize_model(
    objective: &mut MatnormObjective,
    init: &MatrixNormalModel,
    opts: &OptimOptions,
) -> Result<FittedModel> {
    init.validate()?;
    let x0 = objective.pack(init)?;
    let res = optimize::maximize(&mut |x| objective.eval(x), &x0, opts)?;
    let log_lik = objective.eval_raw(&res.x)?;
    let model = objective.unpack(&res.x)?;
    Ok(FittedModel {
        model,
        log_lik,
        objective: res.value,
        iterations: res.iterations,
        evaluations: res.evaluations,
        converged: res.converged,
        grad_inf_norm: res.grad_inf_norm,
    })
}

/// Data handed to a likelihood-ratio test.
pub enum TestInput<'a> {
    /// The raw data matrix, for the naive method.
    Full { x: &'a Matrix },
    /// A two-fold dependent decomposition of the vectorized matrix, for the
    /// marginal and conditional methods.
    Folds { fold_set: &'a FoldSet, a: usize, b: usize },
}

/// One likelihood-ratio test outcome with optimizer diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    pub selected: (usize, usize),
    /// `-2 (penalized-null max log-lik - alternative max log-lik)`, clamped
    /// at zero.
    pub statistic: f64,
    /// Upper chi-squared(1) tail at the statistic.
    pub p_value: f64,
    pub alt: FitDiagnostics,
    pub null: FitDiagnostics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub log_lik: f64,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub grad_inf_norm: f64,
    pub rho: f64,
    pub delta_at_selected: f64,
}

fn diagnostics_of(fit: &FittedModel, selected: (usize, usize)) -> FitDiagnostics {
    FitDiagnostics {
        log_lik: fit.log_lik,
        objective: fit.objective,
        iterations: fit.iterations,
        evaluations: fit.evaluations,
        converged: fit.converged,
        grad_inf_norm: fit.grad_inf_norm,
        rho: fit.model.rho,
        delta_at_selected: fit.model.delta[(selected.0, selected.1)],
    }
}

/// Likelihood-ratio test of `H0: Delta_{ij} = 0` for the selected entry.
/// The alternative maximizes over all correlation matrices and `rho`; the
/// null is approximated by the same maximization with an L2 penalty of
/// 500,000 on the selected entry. The statistic compares raw log-likelihoods
/// at the two optima and is referred to the chi-squared(1) upper tail.
pub fn lrt_test(
    method: Method,
    input: &TestInput,
    selected: (usize, usize),
    opts: &OptimOptions,
) -> Result<TestResult> {
    let (mut alt_obj, mut null_obj, init) = build_objectives(method, input, selected)?;
    let first = optimize_model(&mut alt_obj, &init, opts)?;
    // warm-start the null fit from the alternative optimum with the selected
    // entry zeroed (so the penalty gradient starts small), nudged inside the
    // correlation cone (the marginal optimum can sit on its boundary)
    let mut null_init = first.model.clone();
    null_init.delta[(selected.0, selected.1)] = 0.0;
    null_init.delta[(selected.1, selected.0)] = 0.0;
    null_init.delta = project_correlation_pd(&null_init.delta, 1e-6);
    let null = optimize_model(&mut null_obj, &null_init, opts)?;
    // polish the alternative from the null optimum: the null argmax is
    // feasible for the alternative, so this pass squeezes out the
    // warm-start advantage the null fit would otherwise have
    let mut polish_init = null.model.clone();
    polish_init.delta = project_correlation_pd(&polish_init.delta, 1e-6);
    let polished = optimize_model(&mut alt_obj, &polish_init, opts)?;
    let alt = if polished.log_lik > first.log_lik { polished } else { first };
    let statistic = (2.0 * (alt.log_lik - null.log_lik)).max(0.0);
    let p_value = stats::chi2_upper_tail(statistic, 1.0)?;
    Ok(TestResult {
        method,
        selected,
        statistic,
        p_value,
        alt: diagnostics_of(&alt, selected),
        null: diagnostics_of(&null, selected),
    })
}

fn build_objectives(
    method: Method,
    input: &TestInput,
    selected: (usize, usize),
) -> Result<(MatnormObjective, MatnormObjective, MatrixNormalModel)> {
    match (method, input) {
        (Method::Naive, TestInput::Full { x }) => {
            let alt = MatnormObjective::full(x)?;
            let null = MatnormObjective::full(x)?
                .with_penalty(selected.0, selected.1, NULL_PENALTY);
            let init = identity_init(x, 1.0, 1.0);
            Ok((alt, null, init))
        }
        (Method::Marginal | Method::Conditional, TestInput::Folds { fold_set, a, b }) => {
            let (y1, y2, q1, q2, sigma_p2) = unpack_folds(fold_set, *a, *b)?;
            let init_src = if method == Method::Marginal { &y2 } else { &y1 };
            let init_sig = if method == Method::Marginal { q2 * q2 } else { q1 * q1 };
            let init = identity_init(init_src, init_sig, sigma_p2);
            let (alt, null) = if method == Method::Marginal {
                (
                    MatnormObjective::fold_marginal(y2.clone(), q1, q2, sigma_p2)?,
                    MatnormObjective::fold_marginal(y2, q1, q2, sigma_p2)?
                        .with_penalty(selected.0, selected.1, NULL_PENALTY),
                )
            } else {
                (
                    MatnormObjective::fold_conditional(y1.clone(), y2.clone(), q1, q2, sigma_p2)?,
                    MatnormObjective::fold_conditional(y1, y2, q1, q2, sigma_p2)?
                        .with_penalty(selected.0, selected.1, NULL_PENALTY),
                )
            };
            Ok((alt, null, init))
        }
        (Method::Naive, _) => {
            Err(Error::InvalidParameter("the naive method tests the full data matrix".into()))
        }
        (_, TestInput::Full { .. }) => Err(Error::InvalidParameter(
            "marginal/conditional methods require a two-fold decomposition".into(),
        )),
    }
}

/// Extract the two fold matrices and coefficients from a K = 2 dependent
/// decomposition of a vectorized `a x b` matrix.
pub fn unpack_folds(fs: &FoldSet, a: usize, b: usize) -> Result<(Matrix, Matrix, f64, f64, f64)> {
    if fs.plan.k() != 2 {
        return Err(Error::InvalidPlan("need a two-fold decomposition".into()));
    }
    if fs.p != a * b {
        return Err(Error::Dimension(format!(
            "fold dimension {} is not a*b = {}",
            fs.p,
            a * b
        )));
    }
    let coeffs = fs.plan.fold_coefficients().ok_or_else(|| {
        Error::InvalidPlan("plan does not carry per-fold signal coefficients".into())
    })?;
    let sigma_p2 = match &fs.sigma_prime {
        CovModel::Isotropic { variance, .. } => *variance,
        _ => {
            return Err(Error::InvalidPlan(
                "fold tests require isotropic auxiliary noise (structure-preserving)".into(),
            ))
        }
    };
    let y1 = mat_of_vec(&fs.fold_vector(0)?, a, b)?;
    let y2 = mat_of_vec(&fs.fold_vector(1)?, a, b)?;
    Ok((y1, y2, coeffs[0], coeffs[1], sigma_p2))
}

/// Conservative starting point for the likelihood fits: identity row
/// correlation (a point inside the basin of the honest optimum for every
/// method) with `rho` read off the pooled lag-1 autocorrelation of the data.
pub fn identity_init(ym: &Matrix, signal_sq: f64, sigma_p2: f64) -> MatrixNormalModel {
    let (a, b) = (ym.nrows(), ym.ncols());
    MatrixNormalModel {
        a,
        b,
        delta: Matrix::identity(a, a),
        rho: moment_rho(ym, signal_sq, sigma_p2),
    }
}

/// Pooled lag-1 autocorrelation estimate of the column AR(1) parameter,
/// corrected for the fold's signal share and auxiliary noise floor.
pub fn moment_rho(ym: &Matrix, signal_sq: f64, sigma_p2: f64) -> f64 {
    let (a, b) = (ym.nrows(), ym.ncols());
    let mut num = 0.0;
    let mut den = 0.0;
    for u in 0..a {
        for t in 0..b - 1 {
            num += ym[(u, t)] * ym[(u, t + 1)];
        }
        for t in 0..b {
            den += ym[(u, t)] * ym[(u, t)];
        }
    }
    let raw_lag1 = if den > 0.0 { num / den } else { 0.0 };
    let marginal_var = signal_sq + (1.0 - signal_sq) * sigma_p2;
    (raw_lag1 * marginal_var / signal_sq).clamp(0.05, 0.95)
}

/// Moment-based starting point: back out the row correlation from the sample
/// row covariance (removing the auxiliary noise floor), shrink it toward the
/// identity, and read `rho` off the pooled lag-1 autocorrelation.
pub fn moment_init(ym: &Matrix, signal_sq: f64, sigma_p2: f64) -> Result<MatrixNormalModel> {
    let (a, b) = (ym.nrows(), ym.ncols());
    let s = sample_rowcov(ym)?;
    let mut delta_star = (s - Matrix::identity(a, a) * ((1.0 - signal_sq) * sigma_p2)) / signal_sq;
    // correlation projection with clamped off-diagonals
    let mut scale = Vector::zeros(a);
    for i in 0..a {
        scale[i] = delta_star[(i, i)].max(1e-6).sqrt();
    }
    for i in 0..a {
        for j in 0..a {
            delta_star[(i, j)] /= scale[i] * scale[j];
            if i != j {
                delta_star[(i, j)] = delta_star[(i, j)].clamp(-0.9, 0.9);
            }
        }
    }
    let mut corr = &delta_star * 0.8 + Matrix::identity(a, a) * 0.2;
    for i in 0..a {
        corr[(i, i)] = 1.0;
    }
    let corr = project_correlation_pd(&corr, 1e-4);
    let rho = moment_rho(ym, signal_sq, sigma_p2);
    Ok(MatrixNormalModel { a, b, delta: corr, rho })
}

/// Force a symmetric matrix to be a positive definite correlation matrix by
/// flooring its eigenvalues and renormalizing the diagonal to one.
pub fn project_correlation_pd(m: &Matrix, floor: f64) -> Matrix {
    let a = m.nrows();
    let sym = 0.5 * (m + m.transpose());
    let eig = nalgebra::SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&v| v >= floor) {
        return sym;
    }
    let vals = eig.eigenvalues.map(|v| v.max(floor));
    let scaled = Matrix::from_fn(a, a, |i, j| eig.eigenvectors[(i, j)] * vals[j]);
    let mut fixed = &scaled * eig.eigenvectors.transpose();
    let d: Vec<f64> = (0..a).map(|i| fixed[(i, i)].max(floor).sqrt()).collect();
    for i in 0..a {
        for j in 0..a {
            fixed[(i, j)] /= d[i] * d[j];
        }
    }
    for i in 0..a {
        fixed[(i, i)] = 1.0;
    }
    fixed
}
