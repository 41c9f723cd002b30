//! Report how Fisher information splits across folds, and tune the
//! auxiliary noise scale for a target allocation.
//!
//! Run with: `cargo run --example fisher_allocation`

use gaussfold::decompose::make_plan_info_preserving;
use gaussfold::fisher::{fisher_fission, fisher_split, tune_sigma_prime, ParamModel};
use gaussfold::linalg::{CovModel, Matrix, Vector};

fn main() -> gaussfold::Result<()> {
    // mean parameters are the mean vector itself; covariance parameters are
    // the diagonal variances
    let pm = ParamModel::new(
        Vector::from_vec(vec![0.0, 0.0]),
        Vector::from_vec(vec![2.0, 0.8]),
        |t| t.clone(),
        |phi| CovModel::Diagonal { variances: phi.clone() },
    );

    let q1: f64 = 0.71;
    let report = fisher_fission(&pm, q1, &CovModel::identity(2))?;
    println!("q1 = {q1}");
    for i in 0..2 {
        println!(
            "theta[{i}]: fold 1 {:.4} + conditional fold 2 {:.4} = total {:.4}",
            report.i1_theta[(i, i)],
            report.i2_theta[(i, i)],
            report.total_theta[(i, i)]
        );
    }
    for j in 0..2 {
        println!(
            "phi[{j}]:   fold 1 {:.4} + conditional fold 2 {:.4} = total {:.4}",
            report.i1_phi[(j, j)],
            report.i2_phi[(j, j)],
            report.total_phi[(j, j)]
        );
    }

    // orthogonal splits allocate n_k / n of the covariance information
    let plan = make_plan_info_preserving(6, &[2, 4], 9)?;
    let fractions = fisher_split(&plan.q, &plan.partition)?;
    for (k, (mean_frac, cov_frac)) in fractions.iter().enumerate() {
        println!("split fold {k}: mean share {mean_frac:.4}, covariance share {cov_frac:.4}");
    }

    // tune sigma' for a 60% covariance-information share with a coupled
    // two-parameter covariance guess
    let coupled = ParamModel::new(
        Vector::zeros(2),
        Vector::from_vec(vec![1.0, 0.5]),
        |t| t.clone(),
        |phi| {
            let m = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
            CovModel::Dense { matrix: Matrix::identity(2, 2) * phi[0] + m * phi[1] }
        },
    );
    let tuned = tune_sigma_prime(0.6, &CovModel::identity(2), &coupled)?;
    println!(
        "tuned for gamma = 0.6: q1 = {:.4}, sigma' = {:.4} (objective {:.2e})",
        tuned.q1, tuned.sigma_prime, tuned.objective
    );
    Ok(())
}
