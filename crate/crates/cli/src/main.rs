use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use magrav_cli::run::{invoke, Invocation};
use magrav_cli::Experiment;

#[derive(Parser)]
#[command(name = "magrav", version, about = "Discrete Monge-Ampere gravitation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the smoothed action at the last epsilon of the schedule.
    Minimize(Flags),
    /// Continuation over the epsilon schedule, compared with the exact oracle.
    GammaSweep(Flags),
    /// Event-driven sticky-particle simulation.
    Sticky(Flags),
    /// Heat-wave companion flow and its noised version.
    Heatwave(Flags),
    /// Energy, momentum and velocity-jump checks on the oracle minimizer.
    CheckInvariants(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Directory receiving the output bundle.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Number of grid intervals, overriding the scenario.
    #[arg(long)]
    grid: Option<usize>,
    /// Random seed, overriding the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match cli.command {
        Command::Minimize(f) => (Experiment::Minimize, f),
        Command::GammaSweep(f) => (Experiment::GammaSweep, f),
        Command::Sticky(f) => (Experiment::Sticky, f),
        Command::Heatwave(f) => (Experiment::Heatwave, f),
        Command::CheckInvariants(f) => (Experiment::CheckInvariants, f),
    };
    let done = invoke(&Invocation {
        experiment,
        scenario: flags.scenario,
        out_dir: flags.out_dir,
        grid: flags.grid,
        seed: flags.seed,
    });
    if done.code != 0 {
        eprintln!("{}", done.summary);
    } else if !flags.quiet {
        println!("{}", done.summary);
    }
    ExitCode::from(done.code)
}
