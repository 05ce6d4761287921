use std::process::ExitCode;

use clap::Parser;
use proftree_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("proftree: error: {e}");
            ExitCode::from(e.code)
        }
    }
}
