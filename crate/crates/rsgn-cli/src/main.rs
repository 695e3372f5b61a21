//! `rsgn` — run randomised subspace Gauss-Newton experiment sweeps and
//! aggregate their traces.
//!
//! Exit status: 0 on success (numerical failures inside individual cells are
//! recorded in the trace, not fatal), 2 on configuration errors, 3 on
//! dataset errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rsgn::harness;
use rsgn::Error;

#[derive(Parser)]
#[command(name = "rsgn", version, about = "Randomised subspace Gauss-Newton experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a JSON or TOML experiment config.
    Run {
        /// Experiment configuration file (.json or .toml).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for trace.csv and summary.json
        /// (default: the config's `output_dir`, or ./rsgn-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Maximum concurrently running cells (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Aggregate an existing trace file into per-cell statistics.
    Summarize {
        /// Trace CSV produced by `run`.
        #[arg(long)]
        trace: PathBuf,
        /// Objective target for iterations-to-target statistics.
        #[arg(long)]
        f_target: Option<f64>,
    },
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::InvalidConfig(_) | Error::InvalidParameter(_) => 2,
        Error::Parse { .. } | Error::EmptyDataset(_) | Error::InvalidLabel { .. } | Error::Io(_) => {
            3
        }
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
        } => {
            let spec = harness::load_spec(&config)?;
            let out_dir = out
                .or_else(|| spec.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("rsgn-out"));
            let output = harness::run_experiment(&spec, &out_dir, workers)?;
            print!("{}", output.summary.render_table());
            if output.numerical_failures > 0 {
                eprintln!(
                    "note: {} cell run(s) ended in numerical failure (see trace)",
                    output.numerical_failures
                );
            }
            println!("trace:   {}", output.trace_path.display());
            println!("summary: {}", output.summary_path.display());
            Ok(())
        }
        Command::Summarize { trace, f_target } => {
            let summary = harness::summarize(&trace, f_target)?;
            print!("{}", summary.render_table());
            Ok(())
        }
    }
}
