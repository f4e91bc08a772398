mod args;
mod commands;
mod exit;
mod state_file;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use exit::CliError;

/// Environment variable fixing the worker thread count.
const THREADS_VAR: &str = "ENSEP_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(t) if t >= 1 => t,
        _ => return Err(CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("{THREADS_VAR}: {e}")))
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Params(a) => commands::params(a),
        Command::Test(a) => commands::test(a),
        Command::Ppt(a) => commands::ppt(a),
        Command::Gen(a) => commands::gen(a),
        Command::CheckMoments(a) => commands::check_moments(a),
        Command::Reconstruct(a) => commands::reconstruct_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    if let Err(e) = configure_threads() {
        return e.exit();
    }
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => e.exit(),
    }
}
