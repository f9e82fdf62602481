//! The `run` command: one experiment, one trace.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use varbandit_core::algorithms::{build_env, run_on, AlgorithmReport};
use varbandit_core::types::{Diagnostics, ExperimentConfig, RunTrace, TraceMeta};

use crate::config::config_hash;
use crate::error::CliError;
use crate::output::write_trace;

/// Machine-readable companion of a trace.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub algorithm: String,
    pub seed: u64,
    pub run_index: u64,
    pub config_hash: String,
    pub horizon: u64,
    pub steps: u64,
    pub final_regret: f64,
    pub exploit_reached: Option<bool>,
    pub diagnostics: Diagnostics,
}

pub fn exploit_reached(report: &AlgorithmReport) -> Option<bool> {
    match report {
        AlgorithmReport::Valee(r) => Some(r.exploit_reached),
        _ => None,
    }
}

/// Builds the environment (errors here are config errors) and runs the
/// policy (errors here are runtime errors).
pub fn execute(cfg: &ExperimentConfig, run_index: u64) -> Result<(RunTrace, AlgorithmReport, RunSummary), CliError> {
    let (mut env, _) = build_env(cfg, run_index).map_err(CliError::config)?;
    let diagnostics = env.diagnostics().map_err(CliError::config)?;
    let hash = config_hash(cfg);
    let meta = TraceMeta {
        algorithm: cfg.algorithm.name().into(),
        seed: cfg.seed,
        run_index,
        config_hash: hash.clone(),
    };
    let (trace, report) = run_on(cfg, &mut env, meta).map_err(CliError::runtime)?;
    let summary = RunSummary {
        algorithm: cfg.algorithm.name().into(),
        seed: cfg.seed,
        run_index,
        config_hash: hash,
        horizon: cfg.horizon,
        steps: trace.len() as u64,
        final_regret: trace.final_regret(),
        exploit_reached: exploit_reached(&report),
        diagnostics,
    };
    Ok((trace, report, summary))
}

/// Runs `cfg` and writes `trace.csv` and `run.json` into `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<(PathBuf, RunSummary), CliError> {
    let (trace, _, summary) = execute(cfg, 0)?;
    fs::create_dir_all(out).map_err(|e| CliError::runtime(format!("{}: {e}", out.display())))?;
    let trace_path = out.join("trace.csv");
    let file =
        fs::File::create(&trace_path).map_err(|e| CliError::runtime(format!("{}: {e}", trace_path.display())))?;
    write_trace(std::io::BufWriter::new(file), &trace).map_err(CliError::runtime)?;
    let json = serde_json::to_string_pretty(&summary).map_err(CliError::runtime)?;
    fs::write(out.join("run.json"), json + "\n").map_err(CliError::runtime)?;
    Ok((trace_path, summary))
}
