use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bankersim::cli::{run_subcommand, RunOptions};

/// Banker-walk simulator: validation, homogenized coefficients, walk and
/// reflected-SDE simulation, deadlock convergence studies, regime sweeps.
#[derive(Parser)]
#[command(name = "bankersim", version, about)]
struct Args {
    /// Experiment config file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = default pool). Results never depend on this.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory (overrides the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the environment chain and kernel against the model assumptions.
    Validate,
    /// Dump effective coefficients on a grid of the unit cube.
    Coefficients,
    /// Simulate one free-walk path.
    SimulateWalk,
    /// Simulate the reflected SDE: hit-time samples, or one path with
    /// local times when --trials 0.
    SimulateSde {
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_cap: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Monte Carlo deadlock times of the reflected walk.
    Deadlock,
    /// Walk-vs-diffusion convergence study over a list of box sizes.
    Convergence,
    /// Mean deadlock time across a lambda-grid with regime classification.
    Regimes,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut opts = RunOptions {
        seed: args.seed,
        workers: args.workers,
        out: args.out,
        ..RunOptions::default()
    };
    let name = match &args.command {
        Command::Validate => "validate",
        Command::Coefficients => "coefficients",
        Command::SimulateWalk => "simulate-walk",
        Command::SimulateSde { dt, t_cap, trials, lambda } => {
            opts.dt = *dt;
            opts.t_cap = *t_cap;
            opts.trials = *trials;
            opts.lambda = *lambda;
            "simulate-sde"
        }
        Command::Deadlock => "deadlock",
        Command::Convergence => "convergence",
        Command::Regimes => "regimes",
    };
    match run_subcommand(name, &args.config, &opts) {
        Ok(outcome) => {
            for line in &outcome.messages {
                println!("{line}");
            }
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
