use std::process::ExitCode;

use clap::error::ErrorKind;
use schwarz_ocp::app::run_app;
use schwarz_ocp::config::{parse_config, CliError};

fn main() -> ExitCode {
    let cfg = match parse_config(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
        Err(CliError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run_app(&cfg) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
