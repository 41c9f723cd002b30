use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gaussfold::config::{load_config, FisherReportConfig, SimulateConfig, ValidateClustersConfig};
use gaussfold::error::{Error, Result};
use gaussfold::runner;

/// Decompose Gaussian data into folds and run the fold-based selective
/// inference and validation pipelines.
#[derive(Parser)]
#[command(name = "gaussfold", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a CSV matrix into fold CSVs plus a replayable plan manifest.
    Decompose(DecomposeArgs),
    /// Rebuild the original matrix from a decompose output directory.
    Reconstruct(ReconstructArgs),
    /// Replicated selection-and-test simulation from a config file.
    Simulate(ConfigArgs),
    /// Fit, cluster, and validate a cluster count from a config file.
    ValidateClusters(ConfigArgs),
    /// Fisher-information allocation report from a config file.
    FisherReport(ConfigArgs),
    /// Decompose a Gaussian-process realization on its index set.
    GpDecompose(GpArgs),
}

#[derive(Args)]
struct DecomposeArgs {
    /// Input matrix CSV (rows are observations).
    #[arg(long)]
    input: PathBuf,
    /// Plan kind: sample-split | thinning | fission | info-preserving | dependent.
    #[arg(long)]
    plan: String,
    /// Fold sizes for sample-split / info-preserving, comma separated.
    #[arg(long)]
    sizes: Option<String>,
    /// Thinning shares, comma separated, summing to 1.
    #[arg(long)]
    eps: Option<String>,
    /// Signal column for dependent plans, comma separated, unit norm.
    #[arg(long)]
    q_col: Option<String>,
    /// Auxiliary covariance: iso:<var> | diag:<v1,..> | ar1:<rho> | dense:<csv>.
    #[arg(long, default_value = "iso:1.0")]
    sigma_prime: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "gaussfold-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Directory produced by `decompose`.
    #[arg(long)]
    dir: PathBuf,
    /// Output CSV for the reconstructed matrix.
    #[arg(long, default_value = "reconstructed.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON or TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "gaussfold-out")]
    out_dir: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replicate count.
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args)]
struct GpArgs {
    /// CSV whose last column is the observed value, preceded by index
    /// coordinates.
    #[arg(long)]
    input: PathBuf,
    /// Auxiliary covariance function: white:<var> | sqexp:<var>,<len> | matern32:<var>,<len>.
    #[arg(long, default_value = "white:1.0")]
    kernel: String,
    /// Thinning shares, comma separated (independent folds; needs known C).
    #[arg(long)]
    eps: Option<String>,
    /// Signal column for dependent folds, comma separated, unit norm.
    #[arg(long)]
    q_col: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "gaussfold-out")]
    out_dir: PathBuf,
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number `{v}`: {e}")))
        })
        .collect()
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|v| {
            v.trim().parse::<usize>().map_err(|e| Error::Config(format!("bad size `{v}`: {e}")))
        })
        .collect()
}

fn plan_spec(
    kind: &str,
    sizes: &Option<String>,
    eps: &Option<String>,
    q_col: &Option<String>,
) -> Result<runner::PlanSpec> {
    match kind {
        "sample-split" => Ok(runner::PlanSpec::SampleSplit {
            sizes: parse_usize_list(
                sizes.as_deref().ok_or_else(|| Error::Config("sample-split needs --sizes".into()))?,
            )?,
        }),
        "thinning" => Ok(runner::PlanSpec::Thinning {
            eps: parse_f64_list(
                eps.as_deref().ok_or_else(|| Error::Config("thinning needs --eps".into()))?,
            )?,
        }),
        "fission" => Ok(runner::PlanSpec::Fission),
        "info-preserving" => Ok(runner::PlanSpec::InfoPreserving {
            sizes: parse_usize_list(
                sizes
                    .as_deref()
                    .ok_or_else(|| Error::Config("info-preserving needs --sizes".into()))?,
            )?,
        }),
        "dependent" => Ok(runner::PlanSpec::Dependent {
            q_col: parse_f64_list(
                q_col.as_deref().ok_or_else(|| Error::Config("dependent needs --q-col".into()))?,
            )?,
        }),
        other => Err(Error::Config(format!("unknown plan kind `{other}`"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decompose(args) => {
            let spec = runner::DecomposeSpec {
                input: args.input.display().to_string(),
                plan: plan_spec(&args.plan, &args.sizes, &args.eps, &args.q_col)?,
                sigma_prime: runner::NoiseSpec::parse(&args.sigma_prime)?,
                seed: args.seed,
            };
            let files = runner::run_decompose(&spec, &args.out_dir)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Reconstruct(args) => {
            runner::run_reconstruct(&args.dir, &args.output)?;
            println!("{}", args.output.display());
            Ok(())
        }
        Command::Simulate(args) => {
            let mut cfg: SimulateConfig = load_config(&args.config)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if let Some(reps) = args.replicates {
                cfg.replicates = reps;
            }
            let batches = runner::run_simulate(&cfg, &args.out_dir)?;
            for batch in &batches {
                for s in &batch.summaries {
                    println!(
                        "q1={} omega={} method={}: ok={} detection={:.3} rejection={:.3} ks_p={}",
                        batch.q1,
                        batch.omega.map(|w| w.to_string()).unwrap_or_else(|| "null".into()),
                        s.method.letter(),
                        s.n_ok,
                        s.detection_rate,
                        s.rejection_rate,
                        s.ks_p_value.map(|p| format!("{p:.4}")).unwrap_or_else(|| "-".into()),
                    );
                }
            }
            Ok(())
        }
        Command::ValidateClusters(args) => {
            let mut cfg: ValidateClustersConfig = load_config(&args.config)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if let Some(reps) = args.replicates {
                cfg.replicates = Some(reps);
            }
            let out = runner::run_validate_clusters(&cfg, &args.out_dir)?;
            if let Some(h) = out.best_h {
                println!("selected clusters: {h}");
            }
            if let Some(r) = out.recovery_rate {
                println!("recovery rate: {r:.3}");
            }
            Ok(())
        }
        Command::FisherReport(args) => {
            let cfg: FisherReportConfig = load_config(&args.config)?;
            let table = runner::run_fisher_report(&cfg, &args.out_dir)?;
            print!("{table}");
            Ok(())
        }
        Command::GpDecompose(args) => {
            let plan = match (&args.eps, &args.q_col) {
                (Some(eps), None) => runner::PlanSpec::Thinning { eps: parse_f64_list(eps)? },
                (None, Some(q)) => runner::PlanSpec::Dependent { q_col: parse_f64_list(q)? },
                _ => {
                    return Err(Error::Config(
                        "gp-decompose needs exactly one of --eps or --q-col".into(),
                    ))
                }
            };
            let spec = runner::GpDecomposeSpec {
                input: args.input.display().to_string(),
                plan,
                kernel: args.kernel,
                seed: args.seed,
            };
            let files = runner::run_gp_decompose(&spec, &args.out_dir)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(runner::exit_code_for(&err) as u8)
        }
    }
}
