//! Batch command implementations: everything the `gaussfold` binary does,
//! callable as library functions so outputs are testable without spawning a
//! process.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::casestudy::{
    estimate_delta_rho, hier_cluster, run_block_experiment, select_clusters,
    BlockExperimentConfig, Linkage, ValidationData,
};
use crate::config::{
    CovFamily, FisherReportConfig, SimulateConfig, SplitKind, ValidateClustersConfig,
};
use crate::decompose::{
    general_decompose, make_plan_dependent, make_plan_fission, make_plan_info_preserving,
    make_plan_sample_split, make_plan_thinning, reconstruct, FoldSet, OrthogonalPlan,
};
use crate::error::{Error, Result};
use crate::fisher::{fisher_fission, fisher_split, tune_sigma_prime_with, ParamModel};
use crate::gp::{gp_decompose, CovFunction};
use crate::inference::simulate::{simulate, Setting, SimulateParams};

use crate::linalg::{read_matrix_csv, vec_of_mat, write_matrix_csv, CovModel, Matrix, Vector};

/// Provenance header embedded in every JSON output (and the `.meta.json`
/// sidecar of every CSV, since RFC-4180 has no comment syntax).
#[derive(Debug, Clone, Serialize)]
pub struct Provenance<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: C,
}

pub fn provenance<C: Serialize>(config: C) -> Provenance<C> {
    Provenance { tool: "gaussfold", version: crate::version(), config }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text)?;
    Ok(())
}

fn write_csv_with_meta<C: Serialize>(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
    config: &C,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    let meta = path.with_extension("meta.json");
    write_json(&meta, &provenance(config))?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Plan requested on the command line.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlanSpec {
    SampleSplit { sizes: Vec<usize> },
    Thinning { eps: Vec<f64> },
    Fission,
    InfoPreserving { sizes: Vec<usize> },
    Dependent { q_col: Vec<f64> },
}

impl PlanSpec {
    pub fn build(&self, n: usize, seed: u64) -> Result<OrthogonalPlan> {
        match self {
            PlanSpec::SampleSplit { sizes } => make_plan_sample_split(n, sizes, seed),
            PlanSpec::Thinning { eps } => make_plan_thinning(eps, n),
            PlanSpec::Fission => make_plan_fission(n),
            PlanSpec::InfoPreserving { sizes } => make_plan_info_preserving(n, sizes, seed),
            PlanSpec::Dependent { q_col } => {
                make_plan_dependent(n, q_col.len(), &Vector::from_vec(q_col.clone()), seed)
            }
        }
    }
}

/// Auxiliary covariance requested on the command line:
/// `iso:<variance>`, `diag:<v1,v2,...>`, `ar1:<rho>`, or `dense:<path.csv>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseSpec {
    Iso { variance: f64 },
    Diag { variances: Vec<f64> },
    Ar1 { rho: f64 },
    Dense { path: String },
}

impl NoiseSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("noise spec needs kind:params, got `{text}`")))?;
        match kind {
            "iso" => Ok(NoiseSpec::Iso {
                variance: rest
                    .parse()
                    .map_err(|e| Error::Config(format!("bad isotropic variance: {e}")))?,
            }),
            "diag" => {
                let variances: std::result::Result<Vec<f64>, _> =
                    rest.split(',').map(|v| v.trim().parse()).collect();
                Ok(NoiseSpec::Diag {
                    variances: variances
                        .map_err(|e| Error::Config(format!("bad diagonal variances: {e}")))?,
                })
            }
            "ar1" => Ok(NoiseSpec::Ar1 {
                rho: rest.parse().map_err(|e| Error::Config(format!("bad AR(1) rho: {e}")))?,
            }),
            "dense" => Ok(NoiseSpec::Dense { path: rest.to_string() }),
            other => Err(Error::Config(format!("unknown noise kind `{other}`"))),
        }
    }

    pub fn build(&self, p: usize) -> Result<CovModel> {
        match self {
            NoiseSpec::Iso { variance } => CovModel::isotropic(*variance, p),
            NoiseSpec::Diag { variances } => {
                if variances.len() != p {
                    return Err(Error::Config(format!(
                        "diagonal noise has {} entries, data has {p} columns",
                        variances.len()
                    )));
                }
                CovModel::diagonal(Vector::from_vec(variances.clone()))
            }
            NoiseSpec::Ar1 { rho } => CovModel::ar1(*rho, p),
            NoiseSpec::Dense { path } => {
                let m = read_matrix_csv(Path::new(path))?;
                if m.nrows() != p {
                    return Err(Error::Config(format!(
                        "dense noise is {}x{}, data has {p} columns",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                CovModel::dense(m)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecomposeSpec {
    pub input: String,
    pub plan: PlanSpec,
    pub sigma_prime: NoiseSpec,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct DecomposeManifest {
    version: String,
    plan: OrthogonalPlan,
    sigma_prime: CovModel,
    seed: u64,
    n: usize,
    p: usize,
    fold_files: Vec<String>,
}

/// Decompose a CSV matrix into fold CSVs plus a plan manifest that enables
/// exact reconstruction.
pub fn run_decompose(spec: &DecomposeSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let x = read_matrix_csv(Path::new(&spec.input))?;
    let plan = spec.plan.build(x.nrows(), spec.seed)?;
    let sigma_prime = spec.sigma_prime.build(x.ncols())?;
    let fs = general_decompose(&x, &plan, &sigma_prime, spec.seed)?;

    let mut written = Vec::new();
    let mut fold_files = Vec::new();
    for (k, fold) in fs.folds.iter().enumerate() {
        let name = format!("fold_{k}.csv");
        let path = out_dir.join(&name);
        write_matrix_csv(&path, fold)?;
        fold_files.push(name);
        written.push(path);
    }
    let manifest = DecomposeManifest {
        version: crate::version().to_string(),
        plan: fs.plan.clone(),
        sigma_prime: fs.sigma_prime.clone(),
        seed: spec.seed,
        n: fs.n,
        p: fs.p,
        fold_files,
    };
    let manifest_path = out_dir.join("plan.json");
    write_json(&manifest_path, &serde_json::json!({
        "provenance": provenance(spec),
        "manifest": manifest,
    }))?;
    written.push(manifest_path);
    Ok(written)
}

/// Rebuild the original matrix from a decompose output directory.
pub fn run_reconstruct(dir: &Path, output: &Path) -> Result<()> {
    let manifest_text = std::fs::read_to_string(dir.join("plan.json"))
        .map_err(|e| Error::Config(format!("cannot read plan.json: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(&manifest_text)?;
    let manifest: DecomposeManifest = serde_json::from_value(
        value
            .get("manifest")
            .cloned()
            .ok_or_else(|| Error::Config("plan.json has no manifest".into()))?,
    )?;
    let mut folds = Vec::with_capacity(manifest.fold_files.len());
    for name in &manifest.fold_files {
        folds.push(read_matrix_csv(&dir.join(name))?);
    }
    let fs = FoldSet {
        folds,
        plan: manifest.plan,
        sigma_prime: manifest.sigma_prime,
        n: manifest.n,
        p: manifest.p,
    };
    let x = reconstruct(&fs)?;
    write_matrix_csv(output, &x)?;
    Ok(())
}

/// One batch of the simulation sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationBatch {
    pub q1: f64,
    pub omega: Option<f64>,
    pub summaries: Vec<crate::inference::simulate::MethodSummary>,
}

/// Run the full simulation sweep (every `q1`, every `omega` or the null
/// setting) and write one replicate CSV plus one summary JSON.
pub fn run_simulate(cfg: &SimulateConfig, out_dir: &Path) -> Result<Vec<SimulationBatch>> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    let settings: Vec<(Option<f64>, Setting)> = if cfg.omegas.is_empty() {
        vec![(None, Setting::Null)]
    } else {
        cfg.omegas.iter().map(|&w| (Some(w), Setting::Power { omega: w })).collect()
    };

    let header = vec![
        "q1", "omega", "replicate", "seed", "method", "selected_i", "selected_j", "detected",
        "statistic", "p_value", "alt_converged", "null_converged", "error",
    ];
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut batches = Vec::new();
    for &q1 in &cfg.q1 {
        for (omega, setting) in &settings {
            let params = SimulateParams {
                a: cfg.a,
                b: cfg.b,
                rho: cfg.rho,
                setting: *setting,
                q1,
                sigma_prime: cfg.sigma_prime,
                methods: cfg.methods.clone(),
                replicates: cfg.replicates,
                base_seed: cfg.seed,
                alpha: cfg.alpha,
            };
            let out = simulate(&params)?;
            for r in &out.rows {
                rows.push(vec![
                    q1.to_string(),
                    omega.map(|w| w.to_string()).unwrap_or_default(),
                    r.replicate.to_string(),
                    r.seed.to_string(),
                    r.method.letter().to_string(),
                    r.selected_i.to_string(),
                    r.selected_j.to_string(),
                    r.detected.to_string(),
                    r.statistic.to_string(),
                    r.p_value.to_string(),
                    r.alt_converged.to_string(),
                    r.null_converged.to_string(),
                    r.error.clone().unwrap_or_default(),
                ]);
            }
            batches.push(SimulationBatch { q1, omega: *omega, summaries: out.summaries });
        }
    }
    write_csv_with_meta(&out_dir.join("replicates.csv"), &header, &rows, cfg)?;
    write_json(&out_dir.join("summary.json"), &serde_json::json!({
        "provenance": provenance(cfg),
        "batches": batches,
    }))?;
    Ok(batches)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateClustersOutput {
    pub best_h: Option<usize>,
    pub recovery_rate: Option<f64>,
    pub large_repair: bool,
}

/// Cluster-count validation: either a single observed matrix (data mode) or
/// a replicated synthetic block experiment. Writes the curve CSV, cluster
/// assignments (data mode), and a summary JSON.
pub fn run_validate_clusters(
    cfg: &ValidateClustersConfig,
    out_dir: &Path,
) -> Result<ValidateClustersOutput> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    if let Some(input) = &cfg.input_csv {
        let x = read_matrix_csv(Path::new(input))?;
        let (a, b) = (x.nrows(), x.ncols());
        let q1 = cfg.q1;
        let q2 = (1.0 - q1 * q1).sqrt();
        let plan = make_plan_dependent(1, 2, &Vector::from_vec(vec![q1, q2]), cfg.seed)?;
        let vx = vec_of_mat(&x);
        let row = Matrix::from_fn(1, vx.len(), |_, j| vx[j]);
        let sigma_p = CovModel::isotropic(1.0, vx.len())?;
        let fs = general_decompose(&row, &plan, &sigma_p, cfg.seed)?;
        let x1 = fs.fold_vector(0)?;
        let x2 = fs.fold_vector(1)?;
        let est = estimate_delta_rho(&x1, q1, a, b)?;
        let path = hier_cluster(&est.delta_hat, Linkage::Average)?;
        let data = ValidationData { x1, x2, q1, q2, sigma_prime: 1.0, a, b };
        let curve = select_clusters(&path, &est.delta_hat, est.rho_hat, &data)?;

        let rows: Vec<Vec<String>> = curve
            .points
            .iter()
            .map(|(h, cll)| vec![h.to_string(), cll.to_string()])
            .collect();
        write_csv_with_meta(&out_dir.join("curve.csv"), &["clusters", "cll"], &rows, cfg)?;
        let assignment = path.assignments(curve.best_h)?;
        let arows: Vec<Vec<String>> = assignment
            .iter()
            .enumerate()
            .map(|(row_idx, c)| vec![row_idx.to_string(), c.to_string()])
            .collect();
        write_csv_with_meta(&out_dir.join("clusters.csv"), &["row", "cluster"], &arows, cfg)?;
        write_json(&out_dir.join("summary.json"), &serde_json::json!({
            "provenance": provenance(cfg),
            "best_h": curve.best_h,
            "best_cll": curve.best_cll,
            "rho_hat": est.rho_hat,
            "eigenvalue_floored": est.eigenvalue_floored,
            "repaired_counts": curve.repaired,
            "large_repair": curve.large_repair,
        }))?;
        Ok(ValidateClustersOutput {
            best_h: Some(curve.best_h),
            recovery_rate: None,
            large_repair: curve.large_repair,
        })
    } else {
        let exp = BlockExperimentConfig {
            blocks: cfg.blocks.clone(),
            within_corr: cfg.within_corr.unwrap(),
            b: cfg.b.unwrap(),
            rho: cfg.rho.unwrap(),
            q1: cfg.q1,
            replicates: cfg.replicates.unwrap_or(100),
            base_seed: cfg.seed,
        };
        let out = run_block_experiment(&exp)?;
        let mut rows: Vec<Vec<String>> = Vec::new();
        for (rep, curve) in out.curves.iter().enumerate() {
            for (h, cll) in &curve.points {
                rows.push(vec![rep.to_string(), h.to_string(), cll.to_string()]);
            }
        }
        write_csv_with_meta(
            &out_dir.join("curve.csv"),
            &["replicate", "clusters", "cll"],
            &rows,
            cfg,
        )?;
        let large_repair = out.curves.iter().any(|c| c.large_repair);
        write_json(&out_dir.join("summary.json"), &serde_json::json!({
            "provenance": provenance(cfg),
            "true_blocks": out.true_blocks,
            "recovery_rate": out.recovery_rate,
            "selected_counts": out.selected_counts,
            "large_repair": large_repair,
        }))?;
        Ok(ValidateClustersOutput {
            best_h: None,
            recovery_rate: Some(out.recovery_rate),
            large_repair,
        })
    }
}

fn family_model(cfg: &FisherReportConfig) -> ParamModel {
    let family = cfg.family;
    let p = cfg.p;
    ParamModel::new(
        Vector::from_vec(cfg.theta.clone()),
        Vector::from_vec(cfg.phi.clone()),
        |t| t.clone(),
        move |phi| match family {
            CovFamily::Isotropic => CovModel::Isotropic { variance: phi[0], dim: p },
            CovFamily::Diagonal => CovModel::Diagonal { variances: phi.clone() },
            CovFamily::Ar1 => CovModel::Ar1 { rho: phi[0], dim: p },
        },
    )
}

/// Fisher allocation report: the fission split (and optionally an
/// orthogonal-split table), with the noise scale tuned when `gamma` is set.
/// Returns the rendered table; also writes `fisher.json`.
pub fn run_fisher_report(cfg: &FisherReportConfig, out_dir: &Path) -> Result<String> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    let pm = family_model(cfg);

    let tuned = match cfg.gamma {
        Some(gamma) => {
            let s_guess = match &cfg.s_guess {
                Some(diag) => CovModel::diagonal(Vector::from_vec(diag.clone()))?,
                None => CovModel::identity(cfg.p),
            };
            Some(tune_sigma_prime_with(gamma, &s_guess, &pm, cfg.include_diagonal_terms)?)
        }
        None => None,
    };
    let q1 = cfg.q1.or_else(|| tuned.as_ref().map(|t| t.q1)).unwrap();
    let sigma_prime = cfg
        .sigma_prime
        .or_else(|| tuned.as_ref().map(|t| t.sigma_prime))
        .unwrap_or(1.0);
    let sigma_p = CovModel::isotropic(sigma_prime * sigma_prime, cfg.p)?;
    let report = fisher_fission(&pm, q1, &sigma_p)?;

    let split = match &cfg.split {
        Some(sc) => {
            let plan = match sc.kind {
                SplitKind::SampleSplit => make_plan_sample_split(sc.n, &sc.sizes, sc.seed)?,
                SplitKind::InfoPreserving => make_plan_info_preserving(sc.n, &sc.sizes, sc.seed)?,
            };
            Some(fisher_split(&plan.q, &plan.partition)?)
        }
        None => None,
    };

    let mut table = String::new();
    table.push_str(&format!(
        "fisher allocation (q1 = {q1:.6}, sigma' = {sigma_prime:.6})\n"
    ));
    if let Some(t) = &tuned {
        table.push_str(&format!(
            "tuned from gamma = {:.4}: objective {:.3e} in {} evaluations\n",
            cfg.gamma.unwrap(),
            t.objective,
            t.evaluations
        ));
    }
    table.push_str(&render_block("theta (mean parameters)", &report.i1_theta, &report.i2_theta, &report.total_theta));
    table.push_str(&render_block("phi (covariance parameters)", &report.i1_phi, &report.i2_phi, &report.total_phi));
    if let Some(fr) = &split {
        table.push_str("orthogonal split fractions (mean, covariance):\n");
        for (k, (m, c)) in fr.iter().enumerate() {
            table.push_str(&format!("  fold {k}: {m:.6}  {c:.6}\n"));
        }
    }

    write_json(&out_dir.join("fisher.json"), &serde_json::json!({
        "provenance": provenance(cfg),
        "q1": q1,
        "sigma_prime": sigma_prime,
        "tuned": tuned,
        "report": report,
        "split_fractions": split,
    }))?;
    Ok(table)
}

fn render_block(title: &str, i1: &Matrix, i2: &Matrix, total: &Matrix) -> String {
    let mut s = format!("{title}:\n  {:<10} {:>14} {:>14} {:>14} {:>10}\n", "entry", "fold 1", "cond. fold 2", "total", "share 1");
    for i in 0..i1.nrows() {
        for j in i..i1.ncols() {
            let share = if total[(i, j)].abs() > 1e-300 { i1[(i, j)] / total[(i, j)] } else { f64::NAN };
            s.push_str(&format!(
                "  ({i},{j})     {:>14.6} {:>14.6} {:>14.6} {:>10.4}\n",
                i1[(i, j)],
                i2[(i, j)],
                total[(i, j)],
                share
            ));
        }
    }
    s
}

/// Kernel requested on the command line: `white:<var>`,
/// `sqexp:<var>,<lengthscale>`, or `matern32:<var>,<lengthscale>`.
pub fn parse_kernel(text: &str) -> Result<CovFunction> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("kernel spec needs kind:params, got `{text}`")))?;
    let nums: std::result::Result<Vec<f64>, _> =
        rest.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let nums = nums.map_err(|e| Error::Config(format!("bad kernel parameters: {e}")))?;
    match (kind, nums.as_slice()) {
        ("white", [v]) => CovFunction::white_noise(*v),
        ("sqexp", [v, l]) => CovFunction::squared_exp(*v, *l),
        ("matern32", [v, l]) => CovFunction::matern32(*v, *l),
        _ => Err(Error::Config(format!("unknown kernel spec `{text}`"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GpDecomposeSpec {
    /// CSV whose last column holds the observed values and the preceding
    /// columns the index-point coordinates.
    pub input: String,
    pub plan: PlanSpec,
    pub kernel: String,
    pub seed: u64,
}

/// Decompose a Gaussian-process realization; fold values are emitted as CSV
/// keyed by index point.
pub fn run_gp_decompose(spec: &GpDecomposeSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let table = read_matrix_csv(Path::new(&spec.input))?;
    if table.ncols() < 2 {
        return Err(Error::Config(
            "gp input needs at least one coordinate column plus the value column".into(),
        ));
    }
    let d = table.ncols() - 1;
    let points: Vec<Vec<f64>> = (0..table.nrows())
        .map(|i| (0..d).map(|j| table[(i, j)]).collect())
        .collect();
    let values = Vector::from_iterator(table.nrows(), (0..table.nrows()).map(|i| table[(i, d)]));
    let cprime = parse_kernel(&spec.kernel)?;
    let plan = spec.plan.build(1, spec.seed)?;
    let gfs = gp_decompose(&values, &points, &plan, &cprime, spec.seed)?;

    let mut header: Vec<String> = (0..d).map(|j| format!("t{j}")).collect();
    header.push("value".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut written = Vec::new();
    for (k, fold) in gfs.folds.iter().enumerate() {
        let rows: Vec<Vec<String>> = points
            .iter()
            .zip(fold.iter())
            .map(|(pt, v)| {
                let mut row: Vec<String> = pt.iter().map(|c| c.to_string()).collect();
                row.push(v.to_string());
                row
            })
            .collect();
        let path = out_dir.join(format!("gp_fold_{k}.csv"));
        write_csv_with_meta(&path, &header_refs, &rows, spec)?;
        written.push(path);
    }
    let plan_path = out_dir.join("gp_plan.json");
    write_json(&plan_path, &serde_json::json!({
        "provenance": provenance(spec),
        "plan": gfs.plan,
        "kernel": spec.kernel,
        "seed": spec.seed,
    }))?;
    written.push(plan_path);
    Ok(written)
}

/// Map an error to the documented process exit code: 2 for configuration and
/// input problems, 3 for numerical failures.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::Dimension(_)
        | Error::InvalidPlan(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => 2,
        Error::NotPositiveDefinite(_)
        | Error::Eigen(_)
        | Error::SingleObservationIndependent
        | Error::Optimization(_)
        | Error::Numerical(_) => 3,
    }
}
