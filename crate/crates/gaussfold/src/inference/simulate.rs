//! Replicated selection-and-test experiments: draw matrix-normal data, pick
//! the largest off-diagonal row-covariance entry, test it with the requested
//! methods, and summarize uniformity / detection / power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{general_decompose_with, make_plan_dependent};
use crate::error::{Error, Result};
use crate::inference::{
    lrt_test, sample_rowcov, select_entry, stats, Method, OptimOptions, TestInput,
};
use crate::linalg::{mat_of_vec, rng_from_seed, sample_matrix_normal_with, vec_of_mat, CovModel, Matrix, Vector};

/// The data-generating setting: pure noise, or a planted correlation
/// `omega` between the first two rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "kebab-case")]
pub enum Setting {
    Null,
    Power { omega: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateParams {
    pub a: usize,
    pub b: usize,
    pub rho: f64,
    pub setting: Setting,
    /// Signal weight of the first fold for the marginal/conditional methods.
    pub q1: f64,
    /// Standard deviation of the isotropic auxiliary noise.
    pub sigma_prime: f64,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Rejection level used for power summaries.
    pub alpha: f64,
}

impl SimulateParams {
    pub fn validate(&self) -> Result<()> {
        if self.a < 2 || self.b < 2 {
            return Err(Error::Config("need a >= 2 and b >= 2".into()));
        }
        if !(0.0 < self.rho && self.rho < 1.0) {
            return Err(Error::Config(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(0.0 < self.q1 && self.q1 < 1.0) {
            return Err(Error::Config(format!("q1 must lie in (0, 1), got {}", self.q1)));
        }
        if !(self.sigma_prime > 0.0) {
            return Err(Error::Config("sigma_prime must be positive".into()));
        }
        if let Setting::Power { omega } = self.setting {
            if !(-1.0 < omega && omega < 1.0) {
                return Err(Error::Config(format!("omega must lie in (-1, 1), got {omega}")));
            }
        }
        if self.methods.is_empty() || self.replicates == 0 {
            return Err(Error::Config("need at least one method and one replicate".into()));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::Config("alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// The true row covariance for the setting.
    pub fn delta_true(&self) -> Matrix {
        let mut delta = Matrix::identity(self.a, self.a);
        if let Setting::Power { omega } = self.setting {
            delta[(0, 1)] = omega;
            delta[(1, 0)] = omega;
        }
        delta
    }
}

/// One row of the replicate table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub seed: u64,
    pub method: Method,
    pub selected_i: usize,
    pub selected_j: usize,
    /// Whether the selection found the planted pair (0, 1).
    pub detected: bool,
    pub statistic: f64,
    pub p_value: f64,
    pub alt_converged: bool,
    pub null_converged: bool,
    pub alt_iterations: usize,
    pub null_iterations: usize,
    pub error: Option<String>,
}

/// Per-method aggregate over the successful replicates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n_ok: usize,
    pub n_failed: usize,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub detection_rate: f64,
    pub rejection_rate: f64,
    /// Rejection rate among replicates that selected the planted pair.
    pub conditional_power: Option<f64>,
    pub n_detected: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOutput {
    pub rows: Vec<ReplicateRow>,
    pub summaries: Vec<MethodSummary>,
}

/// Run the replicated experiment. Replicates execute in parallel, each on
/// its own seed (`base_seed + index`) and RNG stream; rows come back in
/// replicate order. Replicate-level failures are recorded, not fatal.
pub fn simulate(params: &SimulateParams) -> Result<SimOutput> {
    simulate_with_options(params, &OptimOptions::default())
}

pub fn simulate_with_options(params: &SimulateParams, opts: &OptimOptions) -> Result<SimOutput> {
    params.validate()?;
    let delta_true = params.delta_true();
    let mut indices: Vec<usize> = (0..params.replicates).collect();
    let mut rows: Vec<Vec<ReplicateRow>> = Vec::new();
    indices
        .par_drain(..)
        .map(|idx| run_replicate(idx, params, &delta_true, opts))
        .collect_into_vec(&mut rows);
    let rows: Vec<ReplicateRow> = rows.into_iter().flatten().collect();
    let summaries = summarize(params, &rows);
    Ok(SimOutput { rows, summaries })
}

fn run_replicate(
    idx: usize,
    params: &SimulateParams,
    delta_true: &Matrix,
    opts: &OptimOptions,
) -> Vec<ReplicateRow> {
    let seed = params.base_seed.wrapping_add(idx as u64);
    let mut rng = rng_from_seed(seed);
    let base_row = |method: Method| ReplicateRow {
        replicate: idx,
        seed,
        method,
        selected_i: 0,
        selected_j: 0,
        detected: false,
        statistic: f64::NAN,
        p_value: f64::NAN,
        alt_converged: false,
        null_converged: false,
        alt_iterations: 0,
        null_iterations: 0,
        error: None,
    };

    let draw = (|| -> Result<Matrix> {
        sample_matrix_normal_with(
            &Matrix::zeros(params.a, params.b),
            &CovModel::dense(delta_true.clone())?,
            &CovModel::ar1(params.rho, params.b)?,
            &mut rng,
        )
    })();
    let x = match draw {
        Ok(x) => x,
        Err(e) => {
            return params
                .methods
                .iter()
                .map(|&m| {
                    let mut row = base_row(m);
                    row.error = Some(format!("data draw failed: {e}"));
                    row
                })
                .collect();
        }
    };

    let needs_folds = params
        .methods
        .iter()
        .any(|m| matches!(m, Method::Marginal | Method::Conditional));
    let fold_state = if needs_folds {
        let built = (|| -> Result<_> {
            let q1 = params.q1;
            let q2 = (1.0 - q1 * q1).sqrt();
            let plan = make_plan_dependent(1, 2, &Vector::from_vec(vec![q1, q2]), seed)?;
            let vec_x = vec_of_mat(&x);
            let row = Matrix::from_fn(1, vec_x.len(), |_, j| vec_x[j]);
            let sigma_p =
                CovModel::isotropic(params.sigma_prime * params.sigma_prime, vec_x.len())?;
            let fs = general_decompose_with(&row, &plan, &sigma_p, &mut rng)?;
            let y1 = mat_of_vec(&fs.fold_vector(0)?, params.a, params.b)?;
            let mut sel = select_entry(&sample_rowcov(&y1)?)?;
            sel.source = crate::inference::SelectionSource::Fold1;
            Ok((fs, sel))
        })();
        Some(built)
    } else {
        None
    };

    let mut out = Vec::with_capacity(params.methods.len());
    for &method in &params.methods {
        let mut row = base_row(method);
        let result = (|| -> Result<()> {
            match method {
                Method::Naive => {
                    let sel = select_entry(&sample_rowcov(&x)?)?;
                    row.selected_i = sel.i;
                    row.selected_j = sel.j;
                    row.detected = sel.i == 0 && sel.j == 1;
                    let test =
                        lrt_test(method, &TestInput::Full { x: &x }, (sel.i, sel.j), opts)?;
                    row.statistic = test.statistic;
                    row.p_value = test.p_value;
                    row.alt_converged = test.alt.converged;
                    row.null_converged = test.null.converged;
                    row.alt_iterations = test.alt.iterations;
                    row.null_iterations = test.null.iterations;
                }
                Method::Marginal | Method::Conditional => {
                    let (fs, sel) = match fold_state.as_ref().unwrap() {
                        Ok(pair) => pair,
                        Err(e) => return Err(Error::Numerical(format!("decomposition failed: {e}"))),
                    };
                    row.selected_i = sel.i;
                    row.selected_j = sel.j;
                    row.detected = sel.i == 0 && sel.j == 1;
                    let input = TestInput::Folds { fold_set: fs, a: params.a, b: params.b };
                    let test = lrt_test(method, &input, (sel.i, sel.j), opts)?;
                    row.statistic = test.statistic;
                    row.p_value = test.p_value;
                    row.alt_converged = test.alt.converged;
                    row.null_converged = test.null.converged;
                    row.alt_iterations = test.alt.iterations;
                    row.null_iterations = test.null.iterations;
                }
            }
            Ok(())
        })();
        if let Err(e) = result {
            row.error = Some(e.to_string());
        }
        out.push(row);
    }
    out
}

fn summarize(params: &SimulateParams, rows: &[ReplicateRow]) -> Vec<MethodSummary> {
    params
        .methods
        .iter()
        .map(|&method| {
            let ok: Vec<&ReplicateRow> = rows
                .iter()
                .filter(|r| r.method == method && r.error.is_none())
                .collect();
            let n_failed = rows
                .iter()
                .filter(|r| r.method == method && r.error.is_some())
                .count();
            let p_values: Vec<f64> = ok.iter().map(|r| r.p_value).collect();
            let (ks_statistic, ks_p_value) = match stats::ks_uniform(&p_values) {
                Ok((d, p)) => (Some(d), Some(p)),
                Err(_) => (None, None),
            };
            let n_ok = ok.len();
            let n_detected = ok.iter().filter(|r| r.detected).count();
            let rejections = ok.iter().filter(|r| r.p_value < params.alpha).count();
            let detected_rejections = ok
                .iter()
                .filter(|r| r.detected && r.p_value < params.alpha)
                .count();
            MethodSummary {
                method,
                n_ok,
                n_failed,
                ks_statistic,
                ks_p_value,
                detection_rate: if n_ok > 0 { n_detected as f64 / n_ok as f64 } else { 0.0 },
                rejection_rate: if n_ok > 0 { rejections as f64 / n_ok as f64 } else { 0.0 },
                conditional_power: if n_detected > 0 {
                    Some(detected_rejections as f64 / n_detected as f64)
                } else {
                    None
                },
                n_detected,
            }
        })
        .collect()
}
