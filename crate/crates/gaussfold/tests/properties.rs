//! Cross-module property tests for the structural invariants, plus
//! Monte-Carlo oracles tying the samplers to the analytic laws.

use gaussfold::decompose::{
    gamma_dirichlet_thin, general_decompose, general_decompose_with, make_plan_dependent,
    make_plan_thinning, reconstruct,
};
use gaussfold::laws::{conditional_law, fold_marginal, joint_law};
use gaussfold::linalg::{
    orth_complete, orthogonality_defect, rng_from_seed, sample_matrix_normal_with, CovModel,
    Matrix, Vector,
};
use proptest::prelude::*;

/// The decomposition sampler follows the analytic joint law: empirical mean
/// and covariance of the stacked dependent folds match the displayed
/// `Q_X Q_X^T (x) Sigma + (I - Q_X Q_X^T) (x) Sigma'` within Monte-Carlo
/// bands.
#[test]
fn dependent_decomposition_follows_the_joint_law() {
    let p = 2;
    let mu = Vector::from_vec(vec![0.8, -0.4]);
    let sigma_m = Matrix::from_row_slice(2, 2, &[1.6, 0.5, 0.5, 0.9]);
    let sigma = CovModel::dense(sigma_m).unwrap();
    let sigma_p = CovModel::diagonal(Vector::from_vec(vec![0.6, 1.4])).unwrap();
    let q1: f64 = 0.75;
    let q2 = (1.0 - q1 * q1).sqrt();
    let q = Vector::from_vec(vec![q1, q2]);
    let plan = make_plan_dependent(1, 2, &q, 7).unwrap();
    let law = joint_law(&q, &mu, &sigma, &sigma_p).unwrap();
    let law_cov = law.cov.materialize();

    let reps = 20_000;
    let mut rng = rng_from_seed(424_242);
    let mean_row = Matrix::from_fn(1, p, |_, j| mu[j]);
    let mut draws: Vec<Vector> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let x = sample_matrix_normal_with(&mean_row, &CovModel::identity(1), &sigma, &mut rng)
            .unwrap();
        let fs = general_decompose_with(&x, &plan, &sigma_p, &mut rng).unwrap();
        let mut stacked = Vector::zeros(2 * p);
        stacked.rows_mut(0, p).copy_from(&fs.fold_vector(0).unwrap());
        stacked.rows_mut(p, p).copy_from(&fs.fold_vector(1).unwrap());
        draws.push(stacked);
    }
    let m = reps as f64;
    let dim = 2 * p;
    let mut emp_mean = Vector::zeros(dim);
    for d in &draws {
        emp_mean += d;
    }
    emp_mean /= m;
    for i in 0..dim {
        let sd = (draws.iter().map(|d| (d[i] - emp_mean[i]).powi(2)).sum::<f64>() / (m - 1.0))
            .sqrt();
        let band = 5.0 * sd / m.sqrt();
        assert!(
            (emp_mean[i] - law.mean[i]).abs() < band,
            "mean[{i}]: empirical {} vs law {} (band {band})",
            emp_mean[i],
            law.mean[i]
        );
    }
    for i in 0..dim {
        for j in 0..dim {
            let prods: Vec<f64> = draws
                .iter()
                .map(|d| (d[i] - emp_mean[i]) * (d[j] - emp_mean[j]))
                .collect();
            let cov = prods.iter().sum::<f64>() / m;
            let sd = (prods.iter().map(|v| (v - cov) * (v - cov)).sum::<f64>() / (m - 1.0))
                .sqrt();
            let band = 5.0 * sd / m.sqrt();
            assert!(
                (cov - law_cov[(i, j)]).abs() < band,
                "cov[{i},{j}]: empirical {cov} vs law {} (band {band})",
                law_cov[(i, j)]
            );
        }
    }
}

fn unit_vector(dim: usize) -> impl Strategy<Value = Vector> {
    proptest::collection::vec(-3.0f64..3.0, dim).prop_filter_map("norm too small", |v| {
        let vec = Vector::from_vec(v);
        let n = vec.norm();
        if n < 1e-3 {
            None
        } else {
            Some(vec / n)
        }
    })
}

fn pd_matrix(dim: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-1.0f64..1.0, dim * dim).prop_map(move |v| {
        let a = Matrix::from_vec(dim, dim, v);
        &a * a.transpose() + Matrix::identity(dim, dim) * (0.3 + dim as f64 * 0.2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn orth_complete_gives_orthonormal_complement(v in (2usize..8).prop_flat_map(unit_vector)) {
        let u = orth_complete(&v).unwrap();
        prop_assert!(orthogonality_defect(&u) <= 1e-12);
        prop_assert!(u.tr_mul(&v).abs().max() <= 1e-12);
    }

    #[test]
    fn thinning_roundtrip_is_identity(
        raw_eps in proptest::collection::vec(0.05f64..1.0, 2..4),
        n in 1usize..4,
        p in 1usize..5,
        seed in 0u64..5000,
    ) {
        let total: f64 = raw_eps.iter().sum();
        let eps: Vec<f64> = raw_eps.iter().map(|e| e / total).collect();
        let plan = make_plan_thinning(&eps, n).unwrap();
        let mut rng = gaussfold::linalg::rng_from_seed(seed);
        let x = gaussfold::linalg::sample::standard_normal_matrix(n, p, &mut rng);
        let fs = general_decompose(&x, &plan, &CovModel::identity(p), seed).unwrap();
        let back = reconstruct(&fs).unwrap();
        prop_assert!((back - x).abs().max() < 1e-10);
    }

    #[test]
    fn gamma_folds_nonnegative_and_sum(
        x in -5.0f64..5.0,
        mu in -2.0f64..2.0,
        raw_eps in proptest::collection::vec(0.05f64..1.0, 1..5),
        seed in 0u64..5000,
    ) {
        let total: f64 = raw_eps.iter().sum();
        let eps: Vec<f64> = raw_eps.iter().map(|e| e / total).collect();
        let folds = gamma_dirichlet_thin(x, mu, &eps, seed).unwrap();
        let s = (x - mu) * (x - mu);
        prop_assert!(folds.iter().all(|&f| f >= 0.0));
        let sum: f64 = folds.iter().sum();
        prop_assert!((sum - s).abs() <= 1e-12 * s.max(1.0));
    }

    #[test]
    fn joint_factorizes_into_marginal_and_conditional(
        p in 1usize..4,
        theta in 0.15f64..1.4,
        seed in 0u64..5000,
    ) {
        let mut rng = gaussfold::linalg::rng_from_seed(seed);
        let a = gaussfold::linalg::sample::standard_normal_matrix(p, p, &mut rng);
        let sigma = CovModel::dense(&a * a.transpose() + Matrix::identity(p, p) * 0.7).unwrap();
        let b = gaussfold::linalg::sample::standard_normal_matrix(p, p, &mut rng);
        let sigma_p = CovModel::dense(&b * b.transpose() + Matrix::identity(p, p) * 0.9).unwrap();
        let mu = gaussfold::linalg::sample::standard_normal_vector(p, &mut rng);
        let x1 = gaussfold::linalg::sample::standard_normal_vector(p, &mut rng);
        let x2 = gaussfold::linalg::sample::standard_normal_vector(p, &mut rng);
        let (q1, q2) = (theta.cos(), theta.sin());
        let joint = joint_law(&Vector::from_vec(vec![q1, q2]), &mu, &sigma, &sigma_p).unwrap();
        let mut stacked = Vector::zeros(2 * p);
        stacked.rows_mut(0, p).copy_from(&x1);
        stacked.rows_mut(p, p).copy_from(&x2);
        let lhs = joint.log_density(&stacked).unwrap();
        let rhs = fold_marginal(q1, &mu, &sigma, &sigma_p).unwrap().log_density(&x1).unwrap()
            + conditional_law(&x1, q1, q2, &mu, &sigma, &sigma_p).unwrap().log_density(&x2).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "joint {} vs product {}", lhs, rhs);
    }

    #[test]
    fn dependent_fold_cross_covariance_formula(
        p in 2usize..5,
        q1 in 0.1f64..0.95,
        seed in 0u64..5000,
    ) {
        // the joint cross block is q1 q2 (Sigma - Sigma'): nonzero exactly
        // when the auxiliary covariance differs from the truth
        let mut rng = gaussfold::linalg::rng_from_seed(seed);
        let a = gaussfold::linalg::sample::standard_normal_matrix(p, p, &mut rng);
        let sigma = CovModel::dense(&a * a.transpose() + Matrix::identity(p, p) * 0.5).unwrap();
        let q2 = (1.0 - q1 * q1).sqrt();
        let mu = Vector::zeros(p);
        let q = Vector::from_vec(vec![q1, q2]);

        let same = joint_law(&q, &mu, &sigma, &sigma).unwrap();
        let cross_same = same.cov.materialize().view((0, p), (p, p)).abs().max();
        prop_assert!(cross_same < 1e-10);

        let b = gaussfold::linalg::sample::standard_normal_matrix(p, p, &mut rng);
        let sigma_p = CovModel::dense(&b * b.transpose() + Matrix::identity(p, p) * 2.5).unwrap();
        let diff = joint_law(&q, &mu, &sigma, &sigma_p).unwrap();
        let cross = diff.cov.materialize().view((0, p), (p, p)).into_owned();
        let expected = (sigma.materialize() - sigma_p.materialize()) * (q1 * q2);
        prop_assert!((cross - expected).abs().max() < 1e-10);
    }

    #[test]
    fn dependent_plan_folds_have_unit_norm_signal_column(
        k in 2usize..5,
        seed in 0u64..2000,
    ) {
        let raw: Vec<f64> = (0..k).map(|j| 0.4 + ((seed + j as u64) % 7) as f64 * 0.2).collect();
        let norm: f64 = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let q = Vector::from_iterator(k, raw.iter().map(|v| v / norm));
        let plan = make_plan_dependent(1, k, &q, seed).unwrap();
        prop_assert!(orthogonality_defect(&plan.q) < 1e-10);
        for j in 0..k {
            prop_assert!((plan.q[(j, 0)] - q[j]).abs() < 1e-12);
        }
    }
}
