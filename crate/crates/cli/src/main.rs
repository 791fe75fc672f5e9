use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use monodromy_cli::{error_document, run, Cli, CliError, EXIT_INVALID};

fn write_output(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(text.as_bytes()).map_err(io)
    } else {
        std::fs::write(path, text).map_err(io)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = run(&cli).and_then(|outcome| {
        write_output(&cli.common.out, &outcome.document.to_canonical())?;
        Ok(outcome.status)
    });
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(err) => {
            eprint!("{}", error_document(&err).to_canonical());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
