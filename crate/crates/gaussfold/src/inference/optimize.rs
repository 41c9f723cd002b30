//! Quasi-Newton maximization over unconstrained coordinates with
//! central-finite-difference gradients.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone)]
pub struct OptimOptions {
    pub max_iters: usize,
    /// Convergence when the gradient infinity norm falls below this.
    pub grad_tol: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions { max_iters: 500, grad_tol: 1e-6, fd_step: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vector,
    /// Objective value at `x` (the maximized function).
    pub value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Maximize `f` from `x0` with BFGS. Non-convergence is reported through the
/// `converged` flag and the best iterate; hard failures (non-finite objective
/// at the start, every step rejected at the first iteration) are errors.
pub fn maximize(
    f: &mut dyn FnMut(&Vector) -> Result<f64>,
    x0: &Vector,
    opts: &OptimOptions,
) -> Result<OptimResult> {
    let n = x0.len();
    let mut evals = 0usize;

    let mut x = x0.clone();
    evals += 1;
    let mut fx = f(&x)?;
    if !fx.is_finite() {
        return Err(Error::Optimization("objective is not finite at the initial point".into()));
    }
    // forward differences while far from the optimum, central once close;
    // convergence is only ever declared on a central-difference gradient
    let mut central = n <= 4;
    let mut grad = fd_gradient(f, &x, fx, opts.fd_step, central, &mut evals)?;
    if !central && grad.abs().max() < 1e-3 {
        central = true;
        grad = fd_gradient(f, &x, fx, opts.fd_step, true, &mut evals)?;
    }
    let mut h = Matrix::identity(n, n); // inverse-Hessian approximation of -f
    let mut iterations = 0usize;
    let mut converged = central && grad.abs().max() < opts.grad_tol;
    let mut stall_count = 0usize;

    while !converged && iterations < opts.max_iters {
        iterations += 1;
        // minimize -f: descent direction for -f is H * grad(f)
        let direction = &h * &grad;
        let dir_deriv = grad.dot(&direction);
        let direction = if dir_deriv <= 0.0 {
            // H lost positive definiteness; reset to steepest ascent
            h = Matrix::identity(n, n);
            grad.clone()
        } else {
            direction
        };
        let slope = grad.dot(&direction);

        // backtracking line search with the Armijo condition
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &x + &direction * t;
            evals += 1;
            match f(&cand) {
                Ok(fc) if fc.is_finite() && fc >= fx + 1e-4 * t * slope => {
                    accepted = Some((cand, fc));
                    break;
                }
                Ok(_) | Err(Error::NotPositiveDefinite(_)) | Err(Error::Numerical(_)) => {
                    t *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        let (x_new, f_new) = match accepted {
            Some(pair) => pair,
            None => {
                if !central {
                    // the forward-difference gradient may be too noisy to
                    // give an ascent direction; retry with central
                    central = true;
                    grad = fd_gradient(f, &x, fx, opts.fd_step, true, &mut evals)?;
                    h = Matrix::identity(n, n);
                    continue;
                }
                // no ascent step exists at line-search resolution: stop here
                break;
            }
        };

        let mut grad_new = fd_gradient(f, &x_new, f_new, opts.fd_step, central, &mut evals)?;
        if !central && grad_new.abs().max() < 1e-3 {
            central = true;
            grad_new = fd_gradient(f, &x_new, f_new, opts.fd_step, true, &mut evals)?;
        }
        let s = &x_new - &x;
        let y = &grad - &grad_new; // gradient change of -f
        let sy = s.dot(&y);
        if sy > 1e-10 * s.norm() * y.norm() {
            // BFGS update of the inverse Hessian of -f
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            let rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let s_hy = &s * hy.transpose();
            h = &h - (&s_hy + s_hy.transpose()) * rho
                + (&s * s.transpose()) * (rho * rho * yhy + rho);
        }

        let improvement = f_new - fx;
        x = x_new;
        fx = f_new;
        grad = grad_new;
        converged = central && grad.abs().max() < opts.grad_tol;
        if improvement.abs() < 1e-13 * (1.0 + fx.abs()) {
            stall_count += 1;
            if stall_count >= 3 {
                break;
            }
        } else {
            stall_count = 0;
        }
    }

    Ok(OptimResult {
        grad_inf_norm: grad.abs().max(),
        x,
        value: fx,
        iterations,
        evaluations: evals,
        converged,
    })
}

/// Finite-difference gradient with per-coordinate step
/// `fd_step * max(1, |x_i|)`: central when `central` is set, forward
/// otherwise. Probes that land on infeasible candidates (non-PD covariances)
/// degrade to one-sided differences against the center.
fn fd_gradient(
    f: &mut dyn FnMut(&Vector) -> Result<f64>,
    x: &Vector,
    fx: f64,
    fd_step: f64,
    central: bool,
    evals: &mut usize,
) -> Result<Vector> {
    let n = x.len();
    let mut grad = Vector::zeros(n);
    let mut work = x.clone();
    let mut probe = |w: &Vector, evals: &mut usize| -> Result<Option<f64>> {
        *evals += 1;
        match f(w) {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            Ok(_) => Ok(None),
            Err(Error::NotPositiveDefinite(_)) | Err(Error::Numerical(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    for i in 0..n {
        let h = fd_step * x[i].abs().max(1.0);
        let orig = x[i];
        work[i] = orig + h;
        let up = probe(&work, evals)?;
        let down = if central || up.is_none() {
            work[i] = orig - h;
            let d = probe(&work, evals)?;
            work[i] = orig;
            d
        } else {
            work[i] = orig;
            None
        };
        grad[i] = match (up, down) {
            (Some(u), Some(d)) => (u - d) / (2.0 * h),
            (Some(u), None) => (u - fx) / h,
            (None, Some(d)) => (fx - d) / h,
            (None, None) => {
                return Err(Error::Optimization(format!(
                    "gradient coordinate {i} has no feasible probe"
                )))
            }
        };
    }
    Ok(grad)
}
