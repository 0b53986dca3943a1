use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mbions_core::cli::{execute, Command, Invocation};

#[derive(Parser)]
#[command(
    name = "mbions",
    version,
    about = "Kinetic ions with Maxwell-Boltzmann electrons"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the model named in the config.
    Run(Flags),
    /// Solve the Poisson-Boltzmann problem with the energy constraint.
    SolvePb(Flags),
    /// Two-species runs over a list of epsilon values.
    LimitSweep(Flags),
    /// Build and verify the stationary electron state.
    Equilibrium(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to output.dir relative to the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    verbose: bool,
    /// Validate the config, print its canonical form and exit.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Cmd::Run(f) => (Command::Run, f),
        Cmd::SolvePb(f) => (Command::SolvePb, f),
        Cmd::LimitSweep(f) => (Command::LimitSweep, f),
        Cmd::Equilibrium(f) => (Command::Equilibrium, f),
    };
    let inv = Invocation {
        command,
        config: flags.config,
        out: flags.out,
        verbose: flags.verbose,
        dry_run: flags.dry_run,
    };
    match execute(&inv) {
        Ok(outcome) => {
            match &outcome.out_dir {
                None => print!("{}", outcome.config.dump()),
                Some(dir) => println!("wrote {}", dir.display()),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
