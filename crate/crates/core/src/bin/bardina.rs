use std::path::PathBuf;
use std::process::ExitCode;

use bardina::harness::commands::{load_spec, parse_bounds_input};
use bardina::harness::{self, CommandOptions, Outcome, SelftestOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bardina", version, about = "Bardina model simulator and estimate checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration (or a bounds sweep file for `bounds`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Continue from a snapshot.
    #[arg(long, global = true)]
    resume: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    Simulate,
    Lyapunov,
    Bounds,
    Verify,
    Selftest {
        #[arg(long, default_value_t = 21)]
        truncation: usize,
        /// Flip the sign of one trilinear term to exercise the failure path.
        #[arg(long, hide = true)]
        broken_sign: bool,
    },
}

fn execute(cli: &Cli) -> bardina::Result<Outcome> {
    let opts = CommandOptions { out: cli.out.clone(), resume: cli.resume.clone() };
    let config = || {
        cli.config.clone().ok_or_else(|| bardina::Error::Config { path: "--config".into(), message: "required".into() })
    };
    match &cli.command {
        Command::Simulate => harness::cmd_simulate(&load_spec(&config()?, cli.seed)?, &opts),
        Command::Lyapunov => harness::cmd_lyapunov(&load_spec(&config()?, cli.seed)?, &opts),
        Command::Verify => harness::cmd_verify(&load_spec(&config()?, cli.seed)?, &opts),
        Command::Bounds => {
            let mut input = parse_bounds_input(&std::fs::read_to_string(config()?)?)?;
            if let (harness::commands::BoundsInput::Spec(spec), Some(seed)) = (&mut input, cli.seed) {
                spec.seed = Some(seed);
            }
            harness::cmd_bounds(&input, &opts)
        }
        Command::Selftest { truncation, broken_sign } => {
            let options = SelftestOptions {
                truncation: *truncation,
                seed: cli.seed.unwrap_or(0),
                trilinear_sign: if *broken_sign { -1.0 } else { 1.0 },
            };
            harness::cmd_selftest(&options, &opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match harness::run_with_threads(cli.threads, || execute(&cli)) {
        Ok(Ok(outcome)) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Ok(Err(e)) | Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
