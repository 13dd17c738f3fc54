//! `entroq`: verify entropy-production bounds, estimate crash times and
//! qubit-count limits, and run noisy density-matrix simulations.
//!
//! Exit codes: 0 success, 1 verification failure, 2 argument or parse error,
//! 3 validation error.

mod commands;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "entroq", version, about = "Entropy-energy bounds for noisy qubit registers")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Base seed for random states.
    #[arg(long, global = true, env = "ENTROQ_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweeps (default: single-threaded).
    #[arg(long, global = true, default_value_t = 1)]
    pub parallel: usize,
    /// Stop a simulation at the first step with negative free-energy shift.
    #[arg(long, global = true)]
    pub stop_on_crash: bool,
    /// Slack below -tolerance counts as a violation.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the entropy lower bound for iterated product depolarizing noise.
    VerifyThm1(commands::Thm1Args),
    /// Check the mixture-entropy lower bound on block-depolarizer families.
    VerifyThm2(commands::Thm2Args),
    /// Estimate the trace-norm contraction rate of a qubit channel.
    Contraction(commands::ContractionArgs),
    /// Step counts after which the certified free-energy shift is negative.
    CrashTime(commands::CrashArgs),
    /// Block count (and qubit count) at which the spatial bound crashes.
    SpatialBound(commands::SpatialArgs),
    /// Run a noisy circuit and write the entropy ledger.
    Simulate(commands::SimulateArgs),
    /// Run an analysis over the cross product of a parameter grid.
    Sweep(sweep::SweepArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let rendered = e.render().to_string();
            eprint!("{rendered}");
            if !rendered.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::VerifyThm1(a) => commands::verify_thm1(a, &cli.global),
        Command::VerifyThm2(a) => commands::verify_thm2(a, &cli.global),
        Command::Contraction(a) => commands::contraction(a, &cli.global),
        Command::CrashTime(a) => commands::crash_time(a, &cli.global),
        Command::SpatialBound(a) => commands::spatial_bound(a, &cli.global),
        Command::Simulate(a) => commands::simulate(a, &cli.global),
        Command::Sweep(a) => sweep::run(a, &cli.global),
    };
    match result.and_then(|outcome| commands::emit(&outcome, &cli.global).map(|_| outcome)) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("verification failed: {}", outcome.summary);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
