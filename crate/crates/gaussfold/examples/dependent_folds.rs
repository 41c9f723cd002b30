//! Split a single observation with unknown covariance into dependent folds,
//! and work with the exact marginal / conditional / collapsed laws.
//!
//! Run with: `cargo run --example dependent_folds`

use gaussfold::decompose::{general_decompose, make_plan_dependent};
use gaussfold::laws::{collapse, conditional_law, fold_marginal, joint_law};
use gaussfold::linalg::{sample_matrix_normal, CovModel, Matrix, Vector};

fn main() -> gaussfold::Result<()> {
    let p = 3;
    let mu = Vector::from_vec(vec![0.5, -1.0, 2.0]);
    // the "unknown" truth; the decomposition never looks at it
    let sigma = CovModel::dense(Matrix::from_row_slice(
        3,
        3,
        &[2.0, 0.6, 0.2, 0.6, 1.5, -0.3, 0.2, -0.3, 1.0],
    ))?;
    let mean = Matrix::from_fn(1, p, |_, j| mu[j]);
    let x = sample_matrix_normal(&mean, &CovModel::identity(1), &sigma, 42)?;

    // analyst-chosen auxiliary noise; isotropic keeps the laws fast
    let sigma_prime = CovModel::identity(p);
    let q1 = 0.5_f64.powf(0.25);
    let q2 = (1.0 - q1 * q1).sqrt();
    let plan = make_plan_dependent(1, 2, &Vector::from_vec(vec![q1, q2]), 0)?;
    let folds = general_decompose(&x, &plan, &sigma_prime, 1)?;
    let x1 = folds.fold_vector(0)?;
    let x2 = folds.fold_vector(1)?;
    println!("fold 1 = {:?}", x1.iter().copied().collect::<Vec<_>>());
    println!("fold 2 = {:?}", x2.iter().copied().collect::<Vec<_>>());

    // exact laws under the (here known) truth
    let marginal = fold_marginal(q1, &mu, &sigma, &sigma_prime)?;
    let conditional = conditional_law(&x1, q1, q2, &mu, &sigma, &sigma_prime)?;
    println!("log p(x1)        = {:.4}", marginal.log_density(&x1)?);
    println!("log p(x2 | x1)   = {:.4}", conditional.log_density(&x2)?);

    let joint = joint_law(&Vector::from_vec(vec![q1, q2]), &mu, &sigma, &sigma_prime)?;
    let mut stacked = Vector::zeros(2 * p);
    stacked.rows_mut(0, p).copy_from(&x1);
    stacked.rows_mut(p, p).copy_from(&x2);
    println!(
        "factorization: joint {:.4} = marginal + conditional {:.4}",
        joint.log_density(&stacked)?,
        marginal.log_density(&x1)? + conditional.log_density(&x2)?
    );

    // collapse a three-fold decomposition into two groups that sum to x
    let s3 = (1.0f64 / 3.0).sqrt();
    let plan3 = make_plan_dependent(1, 3, &Vector::from_vec(vec![s3, s3, s3]), 5)?;
    let folds3 = general_decompose(&x, &plan3, &sigma_prime, 2)?;
    let pair = collapse(&folds3, &[0, 1], &[2], &mu, &sigma)?;
    let total = &pair.x_a + &pair.x_b;
    println!(
        "collapse: d_A = {:.3}, d_B = {:.3}, max |x_A + x_B - x| = {:.3e}",
        pair.d_a,
        pair.d_b,
        (total - x.row(0).transpose()).abs().max()
    );
    println!("conditional of group B given A: log density at x_B = {:.4}",
        pair.conditional()?.log_density(&pair.x_b)?);
    Ok(())
}
