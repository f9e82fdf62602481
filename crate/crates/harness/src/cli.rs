//! Command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::load_config;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "varbandit",
    version,
    about = "Linear bandits with parameter noise: runs, sweeps and reports"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write its trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a grid of experiments and write report.csv and summary.json.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write every run's trace under <out>/traces.
        #[arg(long)]
        traces: bool,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print a sweep directory's report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let (path, summary) = crate::run::run_to_dir(&cfg, &out)?;
            Ok(format!(
                "{}: {} steps, final regret {:.6}",
                path.display(),
                summary.steps,
                summary.final_regret
            ))
        }
        Command::Sweep {
            spec,
            out,
            traces,
            jobs,
        } => {
            let outcome = crate::sweep::sweep_to_dir(&spec, &out, traces, jobs)?;
            Ok(format!(
                "{}: {} cells ok, {} failed",
                out.join("report.csv").display(),
                outcome.summary.cells_ok,
                outcome.summary.cells_failed
            ))
        }
        Command::Report { input } => crate::report::render(&input),
    }
}

/// Parses `std::env::args`, runs the command and maps errors to exit codes.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(msg) => {
            println!("{}", msg.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("varbandit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
