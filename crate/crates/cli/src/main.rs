//! `spectral-mcmc`: simulate data, sample posteriors and benchmark samplers.

mod commands;
mod config;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Context;
use config::Overrides;
use error::{CliError, CliResult};

const THREADS_VAR: &str = "SPECTRAL_MCMC_THREADS";

#[derive(Parser)]
#[command(
    name = "spectral-mcmc",
    version,
    about = "Whittle-likelihood MCMC for stable linear SDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate observed series and write one CSV per condition plus a manifest.
    Simulate(Common),
    /// Run one chain and write chain.csv, summary.txt and summary.csv.
    Sample(Common),
    /// Run every sampler with both derivative engines and tabulate efficiency.
    Benchmark(Common),
    /// Compare automatic and finite-difference derivatives at random points.
    CheckDerivatives(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress and summaries on stdout.
    #[arg(long)]
    quiet: bool,
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Config(format!(
                "{THREADS_VAR} must be a positive integer, got '{value}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_VAR}: {e}")))
}

fn run(command: Command) -> CliResult<()> {
    configure_threads()?;
    let (common, action): (Common, fn(&Context) -> CliResult<()>) = match command {
        Command::Simulate(c) => (c, commands::simulate),
        Command::Sample(c) => (c, commands::sample),
        Command::Benchmark(c) => (c, commands::benchmark),
        Command::CheckDerivatives(c) => (c, commands::check_derivatives),
    };
    let overrides = Overrides {
        output: common.output,
        seed: common.seed,
    };
    let ctx = Context {
        loaded: config::load(&common.config, &overrides)?,
        quiet: common.quiet,
    };
    action(&ctx)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
