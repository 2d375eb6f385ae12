//! Command-line entry point for running experiments from config files.
//!
//! Exit status: 0 success, 2 malformed config, 3 unwritable output,
//! 4 dataset load failure, 5 training failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clc::harness::{run_experiment, sweep, HarnessError};

#[derive(Parser)]
#[command(name = "clc", version, about = "Train classifiers on noisy labels with collaborative label correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed (overrides `train.seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every `*.toml` config in a directory and write comparison.csv.
    Sweep {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed } => run_experiment(&config, out.as_deref(), seed).map(|report| {
            let s = &report.summary.summary;
            println!(
                "{}: gamma {:.4}, last-{} test accuracy {:.4}, peak {:.4} at epoch {} -> {}",
                report.summary.method.name(),
                report.summary.gamma,
                s.last_k,
                s.mean_test_accuracy,
                s.peak_test_accuracy,
                s.peak_epoch,
                report.out_dir.display()
            );
        }),
        Command::Sweep { dir, out } => sweep(&dir, &out).map(|rows| {
            for r in &rows {
                println!("{:<24} {:<16} {:<16} {:.4}", r.config, r.method, r.setting, r.mean_test_accuracy);
            }
            println!("{} runs -> {}", rows.len(), out.join("comparison.csv").display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_failure(&e),
    }
}

fn report_failure(e: &HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
