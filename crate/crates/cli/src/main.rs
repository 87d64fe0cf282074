use std::process::ExitCode;

use clap::Parser;

use infochoice_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let written = run(&cli).and_then(|out| match &cli.out {
        Some(path) => std::fs::write(path, out).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{out}");
            Ok(())
        }
    });
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
