use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use rdl_core::cli::{exit_code, run, Command};

#[derive(Clone, Copy, ValueEnum)]
enum Subcommand {
    Solve,
    Verify,
    Eigen,
    Study,
}

/// Radial degenerate elliptic solver and certifier.
#[derive(Parser)]
#[command(name = "rdl", version)]
struct Args {
    #[arg(value_enum)]
    command: Subcommand,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Subcommand::Solve => Command::Solve,
        Subcommand::Verify => Command::Verify,
        Subcommand::Eigen => Command::Eigen,
        Subcommand::Study => Command::Study,
    };
    let result = run(command, &args.config, args.out.as_deref());
    match &result {
        Ok(outcome) => {
            for file in &outcome.files {
                println!("{}", file.display());
            }
            if !outcome.passed {
                eprintln!("verification failed; see report.json");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
