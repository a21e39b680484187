use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use myopic_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("myopic: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.text),
        None => std::io::stdout().lock().write_all(outcome.text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("myopic: cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.status.exit_code() as u8)
}
