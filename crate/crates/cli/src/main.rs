use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use rfharvest_cli::{
    cmd_bounds, cmd_sample, cmd_validate, parse_model, CliError, ExperimentConfig,
};

/// Ambient RF harvesting under Ginibre α-DPP and Poisson sources.
#[derive(Parser)]
#[command(name = "rfharvest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding `monte_carlo.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path, overriding `outputs.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write one source realization as `x_m,y_m` CSV.
    Sample {
        #[command(flatten)]
        common: Common,
        /// `-1/m` as a number (e.g. -0.5) or `ppp`.
        #[arg(long, default_value = "-1", allow_hyphen_values = true)]
        alpha: String,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
    },
    /// Closed-form bounds and expected rate over the density sweep.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo check of every bound in the sweep; exits 1 on any FAIL.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Worker threads, overriding `workers`.
        #[arg(long)]
        workers: Option<usize>,
        /// JSON report path; defaults to the CSV path with `.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn prepare(common: &Common) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut config = ExperimentConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        config.monte_carlo.master_seed = seed;
    }
    config.validate()?;
    let out = common
        .out
        .clone()
        .or_else(|| config.outputs.csv.clone())
        .ok_or_else(|| CliError::Config("no output path: pass --out".into()))?;
    Ok((config, out))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Sample { common, alpha, rho } => {
            let (config, out) = prepare(&common)?;
            let model = parse_model(&alpha)?;
            cmd_sample(&config, model, rho, config.monte_carlo.master_seed, &out)?;
            Ok(true)
        }
        Command::Bounds { common } => {
            let (config, out) = prepare(&common)?;
            cmd_bounds(&config, &out)?;
            Ok(true)
        }
        Command::Validate {
            common,
            workers,
            report,
        } => {
            let (mut config, out) = prepare(&common)?;
            if workers.is_some() {
                config.workers = workers;
            }
            config.validate()?;
            let report = report.or_else(|| config.outputs.report.clone());
            let validation = cmd_validate(&config, &out, report.as_deref(), config.workers)?;
            let failures = validation
                .rows
                .iter()
                .filter(|r| r.flag.map(|f| f.as_str()) == Some("FAIL"))
                .count();
            println!(
                "{} cells checked, {failures} FAIL, max violation {:.3e}",
                validation.rows.len(),
                validation.report.max_violation
            );
            Ok(validation.passed())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
