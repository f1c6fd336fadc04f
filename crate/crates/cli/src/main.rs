use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;
mod settings;

use commands::{classify, convert, estimate, fit, report, synth};

/// Material-property estimation from gripper compression traces.
#[derive(Debug, Parser)]
#[command(name = "gripstiff", version, about)]
pub struct Cli {
    /// Settings JSON (contact detection, smoothing, fitting)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Parallel batch width (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Seed for synthetic data
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Raw cycles (manifests) to processed stress/strain curves
    Convert(convert::Args),
    /// Young's modulus estimates from curves
    Estimate(estimate::Args),
    /// Kelvin-Voigt, Hunt-Crossley or loop-energy fits from curves
    Fit(fit::Args),
    /// Sort fitted samples into material classes
    Classify(classify::Args),
    /// Generate a synthetic raw cycle with manifest
    Synth(synth::Args),
    /// Aggregate estimates and fits into tables and plot data
    Report(report::Args),
}

/// Error in how the tool was invoked; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Per-item failures in a batch.
pub struct Outcome {
    pub failures: usize,
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let settings = settings::Settings::load(cli.config.as_deref())?;
    let ctx = commands::Context::new(cli, settings)?;
    match &cli.command {
        Command::Convert(a) => convert::run(&ctx, a),
        Command::Estimate(a) => estimate::run(&ctx, a),
        Command::Fit(a) => fit::run(&ctx, a),
        Command::Classify(a) => classify::run(&ctx, a),
        Command::Synth(a) => synth::run(&ctx, a),
        Command::Report(a) => report::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) if o.failures == 0 => ExitCode::SUCCESS,
        Ok(o) => {
            eprintln!("{} item(s) failed", o.failures);
            ExitCode::from(1)
        }
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
