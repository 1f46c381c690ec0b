use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;
use dosesim::{run, Cli, CliError};
use log::{error, LevelFilter};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match LevelFilter::from_str(&cli.log) {
        Ok(l) => l,
        Err(_) => {
            eprintln!("invalid log level {:?}", cli.log);
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    if let Some(n) = cli.workers {
        if n == 0 {
            error!("--workers must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
