//! `levy-mellin` command-line driver.
//!
//! Every command writes its outputs plus a `manifest.json` into `--out`.
//! Exit codes: 0 success, 2 input or configuration error, 3 numerical
//! failure, 4 IO failure.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "levy-mellin", version, about = "Simulate GOU stationary samples and estimate Levy triplets by Mellin inversion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Base seed; every random stream is derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    /// `cp_exp` or `trunc_norm_cp`.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct EstimationArgs {
    #[arg(long, allow_negative_numbers = true)]
    u0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    vn: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long)]
    grid_m: Option<usize>,
    /// Grid count of the density inversion.
    #[arg(long)]
    density_grid_m: Option<usize>,
    /// `flat` or `epanechnikov`.
    #[arg(long)]
    weight: Option<String>,
    /// `flat_top`.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long)]
    x_points: Option<usize>,
    /// Clip the density estimate at zero.
    #[arg(long)]
    positive_part: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a stationary sample and write it as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Number of observations.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Estimate drift, intensity and Levy density from a sample CSV.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Sample file: one positive value per line, optional header.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        estimation: EstimationArgs,
    },
    /// Laplace-exponent curve and replicate estimates for the compound
    /// Poisson model with exponential jumps.
    Experiment1 {
        #[command(flatten)]
        common: Common,
    },
    /// Laplace curve and density estimate for the truncated-normal model.
    Experiment2 {
        #[command(flatten)]
        common: Common,
    },
    /// Monte-Carlo convergence study over a ladder of sample sizes.
    RateStudy {
        #[command(flatten)]
        common: Common,
        /// Comma-separated sample sizes, e.g. `1000,10000,100000`.
        #[arg(long)]
        n_ladder: Option<String>,
        #[arg(long)]
        replicates: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Simulate { common, .. } => ("simulate", common),
        Command::Estimate { common, .. } => ("estimate", common),
        Command::Experiment1 { common } => ("experiment1", common),
        Command::Experiment2 { common } => ("experiment2", common),
        Command::RateStudy { common, .. } => ("rate-study", common),
    };
    let out = common.out.clone();
    let mut manifest = RunManifest::start(name);

    let result = std::fs::create_dir_all(&out)
        .map_err(commands::CliError::from)
        .and_then(|_| match &cli.command {
            Command::Simulate { common, model, n } => commands::simulate(common, model, *n, &mut manifest),
            Command::Estimate { common, input, estimation } => {
                commands::estimate(common, input.as_deref(), estimation, &mut manifest)
            }
            Command::Experiment1 { common } => commands::experiment1(common, &mut manifest),
            Command::Experiment2 { common } => commands::experiment2(common, &mut manifest),
            Command::RateStudy { common, n_ladder, replicates } => {
                commands::rate_study(common, n_ladder.clone(), *replicates, &mut manifest)
            }
        });

    let code = match &result {
        Ok(()) => 0,
        Err(e) => e.exit_code(),
    };
    manifest.exit_code = code;
    match &result {
        Ok(()) => manifest.status = "ok".into(),
        Err(e) => {
            manifest.status = "error".into();
            manifest.error = Some(e.to_string());
            eprintln!("error: {e}");
        }
    }
    if let Err(e) = manifest.write(&out) {
        eprintln!("error: could not write manifest: {e}");
        return ExitCode::from(4);
    }
    ExitCode::from(code as u8)
}
