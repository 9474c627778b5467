use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polar_bohm_cli::equilibria::{cmd_equilibria, EquilibriaArgs};
use polar_bohm_cli::run::cmd_run;
use polar_bohm_cli::verify::run_checks;

/// Bohmian polarization trajectories of two-mode light.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario; POLAR_BOHM_OUT_DIR overrides outputs.dir.
    Run { config: PathBuf },
    /// Locate and classify nodes and saddles of a state.
    Equilibria(EquilibriaArgs),
    /// Run the invariant suite; exit status is nonzero if any check fails.
    Verify {
        /// Skip the large ensemble checks.
        #[arg(long)]
        quick: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config).map(|s| {
            for f in &s.files {
                println!("wrote {}", f.display());
            }
            true
        }),
        Command::Equilibria(args) => cmd_equilibria(&args).map(|r| {
            print!("{}", r.table());
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            true
        }),
        Command::Verify { quick } => {
            let outcomes = run_checks(quick, |o| println!("{o}"));
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} checks, {} failed", outcomes.len(), failed);
            Ok(failed == 0)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
