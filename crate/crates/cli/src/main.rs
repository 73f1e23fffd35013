mod certify;
mod evaluate;
mod report;
mod synthesize;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::{exit_code, Outcome};

#[derive(Parser, Debug)]
#[command(name = "tarifflab", version, about = "Certify, synthesize and evaluate sequential two-part tariffs")]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Each can also be set through a
/// `TARIFFLAB_` environment variable.
#[derive(Args, Debug, Clone)]
pub struct Config {
    /// Seed for every random stream; required.
    #[arg(long, global = true, env = "TARIFFLAB_SEED")]
    pub seed: Option<u64>,
    /// Monte Carlo trials (and bundle-price samples in synthesis).
    #[arg(long, global = true, env = "TARIFFLAB_TRIALS", default_value_t = 10_000)]
    pub trials: usize,
    /// Quantile grid step for synthesis; 1/epsilon must be an integer.
    #[arg(long, global = true, env = "TARIFFLAB_EPSILON", default_value = "1/16")]
    pub epsilon: String,
    /// Relative slack for bounds evaluated in floating point.
    #[arg(long, global = true, env = "TARIFFLAB_TOLERANCE", default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Report destination; standard output when absent.
    #[arg(long, global = true, env = "TARIFFLAB_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, env = "TARIFFLAB_FORMAT", value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every applicable revenue bound on each instance.
    Certify(certify::CertifyArgs),
    /// Build a sequential tariff for identical agents.
    Synthesize(synthesize::SynthesizeArgs),
    /// Estimate the revenue of a mechanism on an instance.
    Evaluate(evaluate::EvaluateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Certify(args) => certify::run(&cli.config, args),
        Command::Synthesize(args) => synthesize::run(&cli.config, args),
        Command::Evaluate(args) => evaluate::run(&cli.config, args),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Ok(Outcome::ScaleLimited) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
