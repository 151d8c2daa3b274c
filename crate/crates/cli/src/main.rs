//! `confbias` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on a usage or
//! input error.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
}

fn dispatch(command: &Command) -> Result<commands::Report, CliError> {
    match command {
        Command::Asymptotics(a) => commands::asymptotics(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::McVerify(a) => commands::mc_verify(a),
        Command::Influence(a) => commands::influence(a),
        Command::Figure(a) => commands::figure(a),
        Command::Classify(a) => commands::classify(a),
        Command::Primacy(a) => commands::primacy(a),
        Command::Polarize(a) => commands::polarize(a),
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let report = pool.install(|| dispatch(&cli.command))?;
    output::emit(&report.text, cli.out.as_deref())?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
