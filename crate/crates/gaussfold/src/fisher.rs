//! Fisher-information allocation across folds and the auxiliary-noise tuner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::chol_with_jitter;
use crate::linalg::{CovModel, Matrix, Vector};

type MeanGradFn = Box<dyn Fn(&Vector, usize) -> Vector + Send + Sync>;
type CovGradFn = Box<dyn Fn(&Vector, usize) -> Matrix + Send + Sync>;

/// A parametric Gaussian model: a mean map `theta -> mu(theta)` and a
/// covariance map `phi -> Sigma(phi)`, with derivatives supplied analytically
/// or by central finite differences (step `1e-5 * max(1, |param|)`).
pub struct ParamModel {
    pub theta: Vector,
    pub phi: Vector,
    mean_fn: Box<dyn Fn(&Vector) -> Vector + Send + Sync>,
    cov_fn: Box<dyn Fn(&Vector) -> CovModel + Send + Sync>,
    mean_grad: Option<MeanGradFn>,
    cov_grad: Option<CovGradFn>,
}

impl std::fmt::Debug for ParamModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParamModel")
            .field("theta", &self.theta)
            .field("phi", &self.phi)
            .field("analytic_mean_grad", &self.mean_grad.is_some())
            .field("analytic_cov_grad", &self.cov_grad.is_some())
            .finish()
    }
}

const FD_STEP: f64 = 1e-5;

impl ParamModel {
    pub fn new(
        theta: Vector,
        phi: Vector,
        mean_fn: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        cov_fn: impl Fn(&Vector) -> CovModel + Send + Sync + 'static,
    ) -> Self {
        ParamModel {
            theta,
            phi,
            mean_fn: Box::new(mean_fn),
            cov_fn: Box::new(cov_fn),
            mean_grad: None,
            cov_grad: None,
        }
    }

    /// Supply the analytic mean gradient `(theta, i) -> d mu / d theta_i`.
    pub fn with_mean_grad(
        mut self,
        grad: impl Fn(&Vector, usize) -> Vector + Send + Sync + 'static,
    ) -> Self {
        self.mean_grad = Some(Box::new(grad));
        self
    }

    /// Supply the analytic covariance gradient `(phi, j) -> d Sigma / d phi_j`.
    pub fn with_cov_grad(
        mut self,
        grad: impl Fn(&Vector, usize) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        self.cov_grad = Some(Box::new(grad));
        self
    }

    pub fn mean(&self) -> Vector {
        (self.mean_fn)(&self.theta)
    }

    pub fn cov(&self) -> CovModel {
        (self.cov_fn)(&self.phi)
    }

    pub fn mean_at(&self, theta: &Vector) -> Vector {
        (self.mean_fn)(theta)
    }

    pub fn cov_at(&self, phi: &Vector) -> CovModel {
        (self.cov_fn)(phi)
    }

    /// `d mu / d theta_i` at the stored parameters.
    pub fn mean_derivative(&self, i: usize) -> Vector {
        if let Some(g) = &self.mean_grad {
            return g(&self.theta, i);
        }
        let h = FD_STEP * self.theta[i].abs().max(1.0);
        let mut up = self.theta.clone();
        up[i] += h;
        let mut down = self.theta.clone();
        down[i] -= h;
        ((self.mean_fn)(&up) - (self.mean_fn)(&down)) / (2.0 * h)
    }

    /// `d Sigma / d phi_j` (materialized) at the stored parameters.
    pub fn cov_derivative(&self, j: usize) -> Matrix {
        if let Some(g) = &self.cov_grad {
            return g(&self.phi, j);
        }
        let h = FD_STEP * self.phi[j].abs().max(1.0);
        let mut up = self.phi.clone();
        up[j] += h;
        let mut down = self.phi.clone();
        down[j] -= h;
        ((self.cov_fn)(&up).materialize() - (self.cov_fn)(&down).materialize()) / (2.0 * h)
    }
}

/// Per-parameter-block information matrices for a two-fold dependent
/// decomposition: the first fold's share, the conditional remainder, and the
/// total carried by the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FisherReport {
    pub i1_theta: Matrix,
    pub i2_theta: Matrix,
    pub total_theta: Matrix,
    pub i1_phi: Matrix,
    pub i2_phi: Matrix,
    pub total_phi: Matrix,
    pub q1: f64,
}

/// Per-fold information fractions for an `r = 0` orthogonal split of `n`
/// i.i.d. rows: fold `k` carries `(1^T Q^(k)T Q^(k) 1) / n` of the
/// mean information and `n_k / n` of the covariance information.
pub fn fisher_split(q: &Matrix, partition: &[usize]) -> Result<Vec<(f64, f64)>> {
    let n = q.nrows();
    if partition.iter().sum::<usize>() != n {
        return Err(Error::InvalidPlan("partition must sum to n".into()));
    }
    if crate::linalg::orthogonality_defect(q) > 1e-10 {
        return Err(Error::InvalidPlan("Q is not orthogonal".into()));
    }
    let ones = Vector::from_element(n, 1.0);
    let mut out = Vec::with_capacity(partition.len());
    let mut row = 0;
    for &nk in partition {
        let block = q.rows(row, nk);
        let v = block * &ones; // Q^(k) 1
        out.push((v.norm_squared() / n as f64, nk as f64 / n as f64));
        row += nk;
    }
    Ok(out)
}

/// Information allocation for a two-fold dependent decomposition with signal
/// weight `q1` and auxiliary covariance `sigma_p`:
///
/// `[I1(theta)]_{ii'} = q1^2 (dmu/dtheta_i)^T V1^{-1} (dmu/dtheta_i')`,
/// `[I1(phi)]_{jj'} = q1^4/2 tr[V1^{-1} dSigma/dphi_j V1^{-1} dSigma/dphi_j']`
/// with `V1 = q1^2 Sigma + (1 - q1^2) Sigma'`; the conditional remainder is
/// the total (standard Gaussian information) minus the first-fold share.
pub fn fisher_fission(pm: &ParamModel, q1: f64, sigma_p: &CovModel) -> Result<FisherReport> {
    if !(0.0 < q1 && q1 < 1.0) {
        return Err(Error::InvalidParameter(format!("q1 must lie in (0, 1), got {q1}")));
    }
    let sigma = pm.cov().materialize();
    let p = sigma.nrows();
    if sigma_p.dim() != p {
        return Err(Error::Dimension("Sigma' dimension differs from Sigma".into()));
    }
    let m = pm.theta.len();
    let nphi = pm.phi.len();
    if m > p {
        return Err(Error::InvalidParameter(format!("M = {m} mean parameters exceed p = {p}")));
    }
    if nphi > p * (p + 1) / 2 {
        return Err(Error::InvalidParameter(format!(
            "N = {nphi} covariance parameters exceed p(p+1)/2"
        )));
    }
    let v1 = &sigma * (q1 * q1) + sigma_p.materialize() * (1.0 - q1 * q1);
    let (chol_v1, _) = chol_with_jitter(v1)?;
    let (chol_s, _) = chol_with_jitter(sigma.clone())?;

    let mean_grads: Vec<Vector> = (0..m).map(|i| pm.mean_derivative(i)).collect();
    let mut i1_theta = Matrix::zeros(m, m);
    let mut total_theta = Matrix::zeros(m, m);
    for i in 0..m {
        let v1_inv_g = chol_v1.solve(&mean_grads[i]);
        let s_inv_g = chol_s.solve(&mean_grads[i]);
        for i2 in 0..m {
            i1_theta[(i, i2)] = q1 * q1 * mean_grads[i2].dot(&v1_inv_g);
            total_theta[(i, i2)] = mean_grads[i2].dot(&s_inv_g);
        }
    }

    let cov_grads: Vec<Matrix> = (0..nphi).map(|j| pm.cov_derivative(j)).collect();
    let v1_inv_d: Vec<Matrix> = cov_grads.iter().map(|d| chol_v1.solve(d)).collect();
    let s_inv_d: Vec<Matrix> = cov_grads.iter().map(|d| chol_s.solve(d)).collect();
    let mut i1_phi = Matrix::zeros(nphi, nphi);
    let mut total_phi = Matrix::zeros(nphi, nphi);
    for j in 0..nphi {
        for j2 in 0..nphi {
            i1_phi[(j, j2)] = 0.5 * q1.powi(4) * trace_product(&v1_inv_d[j], &v1_inv_d[j2]);
            total_phi[(j, j2)] = 0.5 * trace_product(&s_inv_d[j], &s_inv_d[j2]);
        }
    }

    Ok(FisherReport {
        i2_theta: &total_theta - &i1_theta,
        i2_phi: &total_phi - &i1_phi,
        i1_theta,
        total_theta,
        i1_phi,
        total_phi,
        q1,
    })
}

fn trace_product(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Result of the auxiliary-noise tuning: the signal weight `q1 = gamma^{1/4}`
/// and the isotropic noise scale minimizing the trace-mismatch objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TunedNoise {
    pub q1: f64,
    pub sigma_prime: f64,
    pub objective: f64,
    pub evaluations: usize,
}

/// Choose the isotropic auxiliary noise scale for a target allocation
/// `gamma` of covariance information to the first fold: fix
/// `q1 = gamma^{1/4}` and minimize over `c > 0`
///
/// `sum_{j < j'} ( tr[S^-1 D_j S^-1 D_j'] -
///                 tr[(sqrt(gamma) S + (1-sqrt(gamma)) c^2 I)^-1 D_j (...)^-1 D_j'] )^2`
///
/// with the unknown covariance replaced by the guess `S` and
/// `D_j = dSigma/dphi_j`. The sum runs over distinct pairs as printed; pass
/// `include_diagonal = true` to add the `j = j'` terms (needed for
/// single-parameter models, where the off-diagonal sum is empty).
pub fn tune_sigma_prime(gamma: f64, s_guess: &CovModel, pm: &ParamModel) -> Result<TunedNoise> {
    tune_sigma_prime_with(gamma, s_guess, pm, false)
}

pub fn tune_sigma_prime_with(
    gamma: f64,
    s_guess: &CovModel,
    pm: &ParamModel,
    include_diagonal: bool,
) -> Result<TunedNoise> {
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let s = s_guess.materialize();
    let p = s.nrows();
    let nphi = pm.phi.len();
    let n_terms = if include_diagonal { nphi * (nphi + 1) / 2 } else { nphi * (nphi - 1) / 2 };
    if n_terms == 0 {
        return Err(Error::InvalidParameter(
            "tuning objective has no terms; enable diagonal terms for single-parameter models"
                .into(),
        ));
    }
    let cov_grads: Vec<Matrix> = (0..nphi).map(|j| pm.cov_derivative(j)).collect();
    if cov_grads.iter().any(|d| d.nrows() != p) {
        return Err(Error::Dimension("S and dSigma/dphi dimensions differ".into()));
    }
    let (chol_s, _) = chol_with_jitter(s.clone())?;
    let s_inv_d: Vec<Matrix> = cov_grads.iter().map(|d| chol_s.solve(d)).collect();
    let mut target = Matrix::zeros(nphi, nphi);
    for j in 0..nphi {
        for j2 in j..nphi {
            let t = trace_product(&s_inv_d[j], &s_inv_d[j2]);
            target[(j, j2)] = t;
            target[(j2, j)] = t;
        }
    }

    let sqrt_gamma = gamma.sqrt();
    let mut evals = 0usize;
    let mut objective = |ln_c: f64| -> Result<f64> {
        evals += 1;
        let c = ln_c.exp();
        let mc = &s * sqrt_gamma + Matrix::identity(p, p) * ((1.0 - sqrt_gamma) * c * c);
        let (chol_m, _) = chol_with_jitter(mc)?;
        let m_inv_d: Vec<Matrix> = cov_grads.iter().map(|d| chol_m.solve(d)).collect();
        let mut acc = 0.0;
        for j in 0..nphi {
            let start = if include_diagonal { j } else { j + 1 };
            for j2 in start..nphi {
                let diff = target[(j, j2)] - trace_product(&m_inv_d[j], &m_inv_d[j2]);
                acc += diff * diff;
            }
        }
        Ok(acc)
    };

    let (ln_best, best) = golden_section_min(&mut objective, (1e-3f64).ln(), (1e3f64).ln(), 1e-10)?;
    Ok(TunedNoise {
        q1: gamma.powf(0.25),
        sigma_prime: ln_best.exp(),
        objective: best,
        evaluations: evals,
    })
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section_min(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid)?;
    Ok((mid, fm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{make_plan_info_preserving, make_plan_sample_split};

    fn scalar_model(sigma2: f64) -> ParamModel {
        // p = 1: mean parameter is the mean itself, covariance parameter is
        // the variance
        ParamModel::new(
            Vector::from_vec(vec![0.0]),
            Vector::from_vec(vec![sigma2]),
            |t| t.clone(),
            |phi| CovModel::Dense { matrix: Matrix::from_element(1, 1, phi[0]) },
        )
    }

    fn diag_model(vars: Vec<f64>) -> ParamModel {
        ParamModel::new(
            Vector::zeros(vars.len()),
            Vector::from_vec(vars),
            |t| t.clone(),
            |phi| CovModel::Diagonal { variances: phi.clone() },
        )
    }

    #[test]
    fn split_fractions_for_permutation_match_fold_sizes() {
        let plan = make_plan_sample_split(5, &[2, 3], 7).unwrap();
        let fr = fisher_split(&plan.q, &plan.partition).unwrap();
        assert!((fr[0].0 - 0.4).abs() < 1e-12);
        assert!((fr[0].1 - 0.4).abs() < 1e-12);
        assert!((fr[1].0 - 0.6).abs() < 1e-12);
        assert!((fr[1].1 - 0.6).abs() < 1e-12);
    }

    #[test]
    fn split_fractions_single_fold() {
        let q = Matrix::identity(3, 3);
        let fr = fisher_split(&q, &[3]).unwrap();
        assert!((fr[0].0 - 1.0).abs() < 1e-12);
        assert!((fr[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_fractions_sum_to_one_for_random_rotation() {
        let plan = make_plan_info_preserving(4, &[2, 2], 3).unwrap();
        let fr = fisher_split(&plan.q, &plan.partition).unwrap();
        let mean_total: f64 = fr.iter().map(|x| x.0).sum();
        let cov_total: f64 = fr.iter().map(|x| x.1).sum();
        assert!((mean_total - 1.0).abs() < 1e-12);
        assert!((cov_total - 1.0).abs() < 1e-12);
        // direct matrix arithmetic oracle
        let ones = Vector::from_element(4, 1.0);
        let top = plan.q.rows(0, 2) * &ones;
        assert!((fr[0].0 - top.norm_squared() / 4.0).abs() < 1e-12);
        assert!((fr[0].1 - 0.5).abs() < 1e-12);
        assert!((fr[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn split_rejects_non_orthogonal() {
        let q = Matrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
        assert!(fisher_split(&q, &[1, 1]).is_err());
    }

    #[test]
    fn fission_equal_covariances_scale_by_powers_of_q1() {
        let pm = diag_model(vec![2.0, 0.5, 1.5]);
        let sigma_p = pm.cov();
        let q1: f64 = 0.67;
        let rep = fisher_fission(&pm, q1, &sigma_p).unwrap();
        let scaled_theta = &rep.total_theta * (q1 * q1);
        assert!((rep.i1_theta.clone() - scaled_theta).abs().max() < 1e-10);
        let scaled_phi = &rep.total_phi * q1.powi(4);
        assert!((rep.i1_phi.clone() - scaled_phi).abs().max() < 1e-10);
    }

    #[test]
    fn fission_scalar_symbolic_oracle() {
        // p = 1, Sigma = sigma^2 = 2, Sigma' = 1, q1^2 = 1/2:
        // I1(phi) = q1^4/2 / V^2 with V = (sigma^2 + 1)/2 -> 1/18,
        // total(phi) = 1/(2 sigma^4) = 1/8, I2 = 5/72
        let pm = scalar_model(2.0);
        let q1 = 0.5_f64.sqrt();
        let rep = fisher_fission(&pm, q1, &CovModel::identity(1)).unwrap();
        assert!((rep.i1_phi[(0, 0)] - 1.0 / 18.0).abs() < 1e-9);
        assert!((rep.total_phi[(0, 0)] - 1.0 / 8.0).abs() < 1e-9);
        assert!((rep.i2_phi[(0, 0)] - 5.0 / 72.0).abs() < 1e-9);
        // theta: I1 = q1^2 / V = 0.5 / 1.5 = 1/3; total = 1/2
        assert!((rep.i1_theta[(0, 0)] - 1.0 / 3.0).abs() < 1e-9);
        assert!((rep.total_theta[(0, 0)] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fission_thinning_analogue_mean_fraction() {
        // with Sigma' = Sigma and q1 = sqrt(eps), the mean-information
        // fraction of fold 1 is eps
        let pm = scalar_model(1.7);
        let eps: f64 = 0.3;
        let rep = fisher_fission(&pm, eps.sqrt(), &pm.cov()).unwrap();
        let frac = rep.i1_theta[(0, 0)] / rep.total_theta[(0, 0)];
        assert!((frac - eps).abs() < 1e-10);
    }

    #[test]
    fn additivity_against_direct_formulas() {
        let pm = diag_model(vec![1.0, 3.0]);
        let sigma_p = CovModel::diagonal(Vector::from_vec(vec![0.7, 1.1])).unwrap();
        let rep = fisher_fission(&pm, 0.77, &sigma_p).unwrap();
        let sum_theta = &rep.i1_theta + &rep.i2_theta;
        let sum_phi = &rep.i1_phi + &rep.i2_phi;
        assert!((sum_theta - &rep.total_theta).abs().max() < 1e-12);
        assert!((sum_phi - &rep.total_phi).abs().max() < 1e-12);
        // independent route: total information of N(theta, diag(phi))
        // about theta_i is 1/phi_i; about phi_j is 1/(2 phi_j^2)
        assert!((rep.total_theta[(0, 0)] - 1.0).abs() < 1e-8);
        assert!((rep.total_theta[(1, 1)] - 1.0 / 3.0).abs() < 1e-8);
        assert!((rep.total_phi[(0, 0)] - 0.5).abs() < 1e-8);
        assert!((rep.total_phi[(1, 1)] - 1.0 / 18.0).abs() < 1e-8);
    }

    #[test]
    fn i1_diagonal_entries_increase_with_q1() {
        let pm = diag_model(vec![2.0, 0.8]);
        let sigma_p = CovModel::identity(2);
        let mut last_theta = 0.0;
        let mut last_phi = 0.0;
        for step in 1..20 {
            let q1 = step as f64 / 20.0;
            let rep = fisher_fission(&pm, q1, &sigma_p).unwrap();
            assert!(rep.i1_theta[(0, 0)] >= last_theta - 1e-12);
            assert!(rep.i1_phi[(0, 0)] >= last_phi - 1e-12);
            last_theta = rep.i1_theta[(0, 0)];
            last_phi = rep.i1_phi[(0, 0)];
        }
    }

    /// Two covariance parameters whose derivative matrices are not
    /// trace-orthogonal, so the pairwise objective has content.
    fn coupled_model() -> ParamModel {
        ParamModel::new(
            Vector::zeros(2),
            Vector::from_vec(vec![1.0, 0.5]),
            |t| t.clone(),
            |phi| {
                let m2 = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
                CovModel::Dense { matrix: Matrix::identity(2, 2) * phi[0] + m2 * phi[1] }
            },
        )
    }

    #[test]
    fn tuner_identity_guess_gives_unit_noise() {
        let pm = coupled_model();
        let tuned = tune_sigma_prime(0.5, &CovModel::identity(2), &pm).unwrap();
        assert!((tuned.q1 - 0.5_f64.powf(0.25)).abs() < 1e-14);
        assert!((tuned.sigma_prime - 1.0).abs() < 1e-6, "sigma' = {}", tuned.sigma_prime);
        assert!(tuned.objective < 1e-18);
    }

    #[test]
    fn tuner_objective_shrinks_as_gamma_grows() {
        // with S = I the objective at a fixed non-optimal sigma' is
        // (1 - (sqrt(g) + (1 - sqrt(g)) c^2)^-2)^2 T^2, which falls to 0 as
        // gamma -> 1; evaluate at c = 2
        let obj = |gamma: f64| -> f64 {
            let m = gamma.sqrt() + (1.0 - gamma.sqrt()) * 4.0;
            let scale: f64 = 1.0 - m.powi(-2);
            scale * scale
        };
        assert!(obj(0.99) < obj(0.5));
        assert!(obj(0.99) < 1e-2);
    }

    #[test]
    fn tuner_matches_grid_search() {
        let pm = coupled_model();
        let s = CovModel::diagonal(Vector::from_vec(vec![4.0, 1.0])).unwrap();
        let tuned = tune_sigma_prime(0.6, &s, &pm).unwrap();
        // dense grid oracle on log sigma'
        let mut best = (f64::INFINITY, 0.0);
        let grid = 4000;
        let d: Vec<Matrix> = (0..2).map(|j| pm.cov_derivative(j)).collect();
        let sm = s.materialize();
        let (chol_s, _) = chol_with_jitter(sm.clone()).unwrap();
        let t0 = trace_product(&chol_s.solve(&d[0]), &chol_s.solve(&d[1]));
        for g in 0..=grid {
            let ln_c = -3.0 * std::f64::consts::LN_10
                + (6.0 * std::f64::consts::LN_10) * g as f64 / grid as f64;
            let c = ln_c.exp();
            let mc = &sm * 0.6_f64.sqrt()
                + Matrix::identity(2, 2) * ((1.0 - 0.6_f64.sqrt()) * c * c);
            let (chol_m, _) = chol_with_jitter(mc).unwrap();
            let tc = trace_product(&chol_m.solve(&d[0]), &chol_m.solve(&d[1]));
            let v = (t0 - tc) * (t0 - tc);
            if v < best.0 {
                best = (v, c);
            }
        }
        assert!(
            (tuned.sigma_prime - best.1).abs() < 1e-3 * best.1.max(1.0),
            "tuned {} vs grid {}",
            tuned.sigma_prime,
            best.1
        );
    }

    #[test]
    fn tuner_rejects_empty_objective() {
        let pm = scalar_model(1.0);
        assert!(tune_sigma_prime(0.5, &CovModel::identity(1), &pm).is_err());
        assert!(tune_sigma_prime_with(0.5, &CovModel::identity(1), &pm, true).is_ok());
    }

    #[test]
    fn finite_difference_derivatives_match_analytic() {
        let fd = diag_model(vec![2.0, 3.0]);
        let analytic = ParamModel::new(
            Vector::zeros(2),
            Vector::from_vec(vec![2.0, 3.0]),
            |t| t.clone(),
            |phi| CovModel::Diagonal { variances: phi.clone() },
        )
        .with_cov_grad(|_, j| {
            let mut m = Matrix::zeros(2, 2);
            m[(j, j)] = 1.0;
            m
        })
        .with_mean_grad(|_, i| {
            let mut v = Vector::zeros(2);
            v[i] = 1.0;
            v
        });
        for j in 0..2 {
            let diff = (fd.cov_derivative(j) - analytic.cov_derivative(j)).abs().max();
            assert!(diff < 1e-8);
            let mdiff = (fd.mean_derivative(j) - analytic.mean_derivative(j)).abs().max();
            assert!(mdiff < 1e-8);
        }
    }
}
