use std::fs::File;
use std::process::ExitCode;

use arrogance_cli::commands::{
    emit, run_compare, run_estimate, run_generate, CompareArgs, EstimateArgs, GenerateArgs,
};
use arrogance_cli::error::{CliError, Result};
use clap::{Parser, Subcommand};

/// Marginal likelihood estimation from posterior samples.
#[derive(Debug, Parser)]
#[command(name = "arrogance", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the log marginal likelihood of a sample file
    Estimate(EstimateArgs),
    /// Write exact posterior draws from an analytic model
    Generate(GenerateArgs),
    /// Compare against the harmonic-mean estimator over seeded replications
    Compare(CompareArgs),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(args) => {
            let report = run_estimate(&args)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(args.output.as_deref(), &report.to_json()?)
        }
        Command::Generate(args) => match &args.output {
            Some(path) => {
                let f = File::create(path).map_err(|e| CliError::io(path, e))?;
                run_generate(&args, f)
            }
            None => run_generate(&args, std::io::stdout().lock()),
        },
        Command::Compare(args) => {
            let report = run_compare(&args)?;
            emit(
                args.output.as_deref(),
                &serde_json::to_string_pretty(&report)?,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
