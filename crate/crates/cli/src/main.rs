mod check;
mod mub;
mod output;
mod scan;
mod state;
mod tomo;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Biphoton polarization qutrits: states, bases, tomography and scans.
#[derive(Debug, Parser)]
#[command(name = "biqutrit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Amplitudes, density matrix, Majorana pair and filter settings of a state.
    State(state::Args),
    /// Pairwise overlaps of the twelve protocol states.
    Mub(mub::Args),
    /// Raw and maximum-likelihood reconstruction from simulated or recorded counts.
    Tomo(tomo::Args),
    /// Phase scans: nine-setting tomography or orthogonality fringes (CSV).
    Scan(scan::Args),
    /// Regression of the reference beta'' reconstruction and the MUB check.
    PaperCheck(check::Args),
}

/// Exit status for check failures; usage and input errors use 2.
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::State(a) => state::run(a),
        Command::Mub(a) => mub::run(a),
        Command::Tomo(a) => tomo::run(a),
        Command::Scan(a) => scan::run(a),
        Command::PaperCheck(a) => check::run(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
