//! Decompose a Gaussian-process realization on a finite index set and
//! evaluate its fold laws.
//!
//! Run with: `cargo run --example gp_folds`

use gaussfold::decompose::make_plan_dependent;
use gaussfold::gp::{gp_conditional, gp_decompose, gp_fold_marginal, CovFunction};
use gaussfold::linalg::{sample_matrix_normal, CovModel, Matrix, Vector};

fn main() -> gaussfold::Result<()> {
    // observe a process at six points on the line
    let points: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.4]).collect();
    let kernel = CovFunction::squared_exp(1.0, 0.8)?;
    let gram = kernel.gram(&points)?;
    let draw = sample_matrix_normal(
        &Matrix::zeros(1, points.len()),
        &CovModel::identity(1),
        &CovModel::dense(gram)?,
        21,
    )?;
    let x_values = draw.row(0).transpose();
    println!("observed values: {:?}", x_values.iter().copied().collect::<Vec<_>>());

    // dependent two-fold split with white-noise auxiliary process
    let q1 = 0.5_f64.powf(0.25);
    let q2 = (1.0 - q1 * q1).sqrt();
    let plan = make_plan_dependent(1, 2, &Vector::from_vec(vec![q1, q2]), 0)?;
    let white = CovFunction::white_noise(1.0)?;
    let folds = gp_decompose(&x_values, &points, &plan, &white, 8)?;
    println!("fold 1: {:?}", folds.folds[0].iter().copied().collect::<Vec<_>>());
    println!("fold 2: {:?}", folds.folds[1].iter().copied().collect::<Vec<_>>());
    println!(
        "reconstruction error: {:.3e}",
        (folds.reconstruct()? - &x_values).abs().max()
    );

    // marginal and conditional laws on the same index set
    let zero_mean = |_: &[f64]| 0.0;
    let marginal = gp_fold_marginal(0, &plan, &points, &zero_mean, &kernel, &white)?;
    println!("fold-1 marginal log density: {:.4}", marginal.log_density(&folds.folds[0])?);
    let conditional =
        gp_conditional(&folds.folds[0], &plan, &points, &zero_mean, &kernel, &white)?;
    println!(
        "fold-2 conditional log density: {:.4}",
        conditional.log_density(&folds.folds[1])?
    );
    Ok(())
}
