use std::process::ExitCode;

use clap::Parser;
use lagdesc_cli::{run, Args, EXIT_USAGE};

fn main() -> ExitCode {
    let cfg = match Args::parse().into_config() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("ldmap: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(&cfg) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ldmap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
