mod commands;
mod run_dir;

use std::process::ExitCode;

use clap::Parser;
use oodtrack_core::{Error, ErrorClass};
use serde_json::json;

use commands::Cli;

/// Failure surfaced to the user, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.class() {
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Core(e) => e.kind(),
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    let code = err.exit_code();
    let body = json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exitCode": code,
    });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("OODTRACK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("OODTRACK_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    if let Err(e) = init_threads() {
        return fail(&e);
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
