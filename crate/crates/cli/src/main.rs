use std::io;
use std::process::ExitCode;

use clap::Parser;
use spad_gate_cli::{configure_threads, run, Cli, THREADS_VAR};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var(THREADS_VAR).ok();
    let result = configure_threads(threads.as_deref())
        .and_then(|()| run(&cli, &mut io::stdout().lock(), &mut io::stderr().lock()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
