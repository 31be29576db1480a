//! Deterministic experiment runner: verification suites, temperature
//! sweeps, and the sampled-data success-detection pipeline, all driven by
//! JSON configs. Outputs are byte-stable across reruns.

mod checks;
mod config;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use piblab::estimators::{
    declare_success, entropy_estimate, loglik_estimate, Corpus, EntropyMethod,
};
use piblab::solver::{kkt_report, sweep, sweep_csv, SweepPoint};

/// Errors split by exit code: config problems exit 2, failed checks or
/// computation errors exit 1.
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Check(String),
}

impl AppError {
    fn config(e: impl std::fmt::Display) -> Self {
        AppError::Config(e.to_string())
    }

    fn check(e: impl std::fmt::Display) -> Self {
        AppError::Check(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "piblab",
    about = "Exact information-bottleneck experiments on finite worlds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity/bound/minimizer verification suite.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep the temperature grids and write the CSV table plus, when
    /// thresholds are configured, the complementary-slackness report.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the corpus entropy and minibatch log-likelihood estimators and
    /// emit the success decision.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Forces compression-based entropy estimation with this codec.
        #[arg(long)]
        codec: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(AppError::Check(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(AppError::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Verify { config, out, seed } => cmd_verify(&config, out, seed),
        Command::Sweep { config, out, seed } => cmd_sweep(&config, out, seed),
        Command::Estimate {
            config,
            out,
            seed,
            codec,
        } => cmd_estimate(&config, out, seed, codec),
    }
}

fn load(config: &Path, seed: Option<u64>) -> Result<config::Experiment, AppError> {
    let mut exp = config::parse_config(config)?;
    if let Some(s) = seed {
        exp.seed = s;
    }
    Ok(exp)
}

fn cmd_verify(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), AppError> {
    let exp = load(config, seed)?;
    let report = checks::run_verify(&exp)?;
    for c in &report.checks {
        println!(
            "{} {} (residual {:.3e}, tolerance {:.0e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance
        );
    }
    let out_dir = out_dir(&out, &exp);
    write_atomic(&out_dir.join("verify_report.json"), &to_json(&report)?)?;
    if report.all_passed {
        println!("all {} checks passed", report.checks.len());
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        Err(AppError::Check(format!(
            "{failed} verification check(s) failed"
        )))
    }
}

fn cmd_sweep(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), AppError> {
    let exp = load(config, seed)?;
    let records =
        sweep(&exp.world, &exp.family, &exp.beta_grid, &exp.gamma_grid).map_err(AppError::check)?;
    let out_dir = out_dir(&out, &exp);
    write_atomic(&out_dir.join("sweep.csv"), &sweep_csv(&records))?;
    println!(
        "sweep: {} grid points written to {}",
        records.len(),
        out_dir.join("sweep.csv").display()
    );
    if let Some((i0_train, i0_val)) = exp.thresholds {
        let points: Vec<SweepPoint> = records
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().cloned())
            .collect();
        let report = kkt_report(&points, i0_train, i0_val).map_err(AppError::check)?;
        write_atomic(&out_dir.join("kkt.json"), &to_json(&report)?)?;
        println!(
            "kkt: success={}, selected beta={}, gamma={}",
            report.success, report.selected_beta, report.selected_gamma
        );
    }
    Ok(())
}

fn cmd_estimate(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    codec: Option<String>,
) -> Result<(), AppError> {
    let exp = load(config, seed)?;
    let plan = exp
        .estimate
        .as_ref()
        .ok_or_else(|| AppError::Config("config has no estimate section".into()))?;
    let text = std::fs::read_to_string(&plan.corpus_path).map_err(|e| {
        AppError::Config(format!(
            "cannot read corpus {}: {e}",
            plan.corpus_path.display()
        ))
    })?;
    let corpus = Corpus::parse(exp.world.x_alphabet().clone(), &text).map_err(AppError::config)?;
    let method = match codec {
        Some(id) => EntropyMethod::Compression(id),
        None => plan.method.clone(),
    };
    let h_hat = entropy_estimate(&corpus, &method).map_err(AppError::check)?;
    let l_hat = loglik_estimate(
        &corpus,
        &exp.family,
        &plan.theta_source,
        plan.batch_size,
        plan.batch_mode,
        exp.seed,
    )
    .map_err(AppError::check)?;
    let mut report = declare_success(h_hat, l_hat, plan.i0);
    report.estimator_ids = vec![
        method.id(),
        match plan.batch_mode {
            piblab::estimators::BatchMode::Partition => "minibatch_partition".into(),
            piblab::estimators::BatchMode::WithReplacement { .. } => {
                "minibatch_with_replacement".into()
            }
        },
    ];
    let out_dir = out_dir(&out, &exp);
    write_atomic(&out_dir.join("estimate.json"), &to_json(&report)?)?;
    println!(
        "estimate: h_hat={:.6}, l_hat={:.6}, threshold={:.6}, decision={}",
        report.h_hat, report.l_hat, report.threshold, report.decision
    );
    Ok(())
}

fn out_dir(out: &Option<PathBuf>, exp: &config::Experiment) -> PathBuf {
    out.clone()
        .or_else(|| exp.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, AppError> {
    let mut s = serde_json::to_string_pretty(value).map_err(AppError::check)?;
    s.push('\n');
    Ok(s)
}

/// Writes the full contents to a temporary file, then renames into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), AppError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| AppError::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)
        .map_err(|e| AppError::Config(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| AppError::Config(format!("cannot move into {}: {e}", path.display())))?;
    Ok(())
}
