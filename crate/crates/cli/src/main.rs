use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpmix_core::Tier;

mod output;
mod presets;
mod run;
mod sweep;
mod validate;

/// Multi-species Fokker-Planck mixture solver.
#[derive(Parser)]
#[command(name = "fpmix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every pair of a config against a constraint tier.
    Validate(ValidateArgs),
    /// Run a simulation and write series, snapshots, diagnostics and a manifest.
    Run(RunArgs),
    /// Run one simulation per value of a pair parameter and summarize fitted rates.
    Sweep(SweepArgs),
    /// Print the literature presets for given masses, densities and frictions.
    Presets(presets::PresetArgs),
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `run.tier` from the config.
    #[arg(long)]
    tier: Option<Tier>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    tier: Option<Tier>,
    /// Reweight each species after every step onto the exactly conserved totals.
    #[arg(long)]
    correct_moments: bool,
    /// Worker threads for the per-cell collision stage.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "sweep-out")]
    out: PathBuf,
    /// One of delta, alpha, gamma, c_ij, c_ji.
    #[arg(long)]
    param: sweep::Param,
    /// `start:end:count`, inclusive of both ends.
    #[arg(long)]
    range: sweep::Range,
    /// Index of the pair in the config's `pairs` list.
    #[arg(long, default_value_t = 0)]
    pair: usize,
    #[arg(long)]
    tier: Option<Tier>,
    #[arg(long)]
    correct_moments: bool,
    #[arg(long)]
    jobs: Option<usize>,
}

/// Exit status for rejected parameters.
pub const EXIT_VIOLATION: u8 = 1;
/// Exit status for a solver or CFL failure during a run.
pub const EXIT_RUN_FAILURE: u8 = 2;
/// Exit status for unreadable configs and I/O errors.
pub const EXIT_INPUT: u8 = 3;

fn set_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Validate(a) => validate::cmd_validate(&a.config, a.tier),
        Command::Run(a) => {
            set_jobs(a.jobs);
            run::cmd_run(&a.config, &a.out, a.tier, a.correct_moments)
        }
        Command::Sweep(a) => {
            set_jobs(a.jobs);
            sweep::cmd_sweep(&a)
        }
        Command::Presets(a) => presets::cmd_presets(&a),
    };
    match status {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
