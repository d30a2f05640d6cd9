//! `hisent` command-line driver.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use hisent_core::error::ErrorKind;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    let result = match cli.command {
        args::Command::Crossval(a) => commands::crossval(&a),
        args::Command::LearningCurve(a) => commands::learning_curve(&a),
        args::Command::Train(a) => commands::train(&a),
        args::Command::Predict(a) => commands::predict(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Runtime => 4,
            })
        }
    }
}
