use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use compactness_lab::cli;

#[derive(Parser)]
#[command(name = "compactness-lab", version, about = "Run compactness diagnostics and write CSV reports")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, writing report.csv and manifest.txt into --out.
    Run {
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List experiments and their config keys.
    List,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match args.command {
        Command::List => {
            print!("{}", cli::listing());
            ExitCode::SUCCESS
        }
        Command::Run { experiment, config, out, seed } => match cli::run(&experiment, &config, &out, seed) {
            Ok(outcome) => {
                for f in &outcome.failures {
                    eprintln!("FAILED: {f}");
                }
                println!("{}: {} (seed {})", outcome.experiment, if outcome.failures.is_empty() { "ok" } else { "failed" }, outcome.seed);
                ExitCode::from(outcome.exit_code() as u8)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
