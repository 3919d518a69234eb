mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::RunContext;

#[derive(Debug, Parser)]
#[command(name = "pmet", version, about = "Local Metropolis chains on convex polytopes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 when a check fails.
    #[arg(long)]
    assert: bool,
    /// Tolerance for the main check of the command.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Weak-incoming and spanning checks. Exit status 3 when not weakly incoming.
    Check(Common),
    /// Runs one chain and writes its trajectory.
    Sample(Common),
    /// Spectrum of the discretized operator at each h.
    Spectrum(Common),
    /// Distance to uniform along the chain.
    Tv(Common),
    /// Gap over h² across a list of step scales.
    Sweep(Common),
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let (common, f): (&Common, fn(&RunContext) -> anyhow::Result<i32>) = match &cli.command {
        Command::Check(c) => (c, commands::check),
        Command::Sample(c) => (c, commands::sample),
        Command::Spectrum(c) => (c, commands::spectrum_cmd),
        Command::Tv(c) => (c, commands::tv_cmd),
        Command::Sweep(c) => (c, commands::sweep_cmd),
    };
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let ctx = RunContext::load(&common.config, common.seed, common.out.clone(), common.assert, common.tol)?;
    f(&ctx)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
