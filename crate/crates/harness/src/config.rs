//! Loading experiment configs.

use std::path::Path;

use sha2::{Digest, Sha256};
use varbandit_core::types::ExperimentConfig;

use crate::error::CliError;

/// Environment variable overriding the master seed of configs and sweeps.
pub const SEED_ENV: &str = "VARBANDIT_SEED";

pub fn seed_override() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => parse_seed(&v).map(Some),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::config(format!("{SEED_ENV}: {e}"))),
    }
}

pub fn parse_seed(v: &str) -> Result<u64, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))
}

/// Parses and validates a JSON config. Syntax errors carry line and column,
/// validation errors the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(CliError::config)?;
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Loads a config and applies the seed override.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = read_file(path)?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(seed) = seed_override()? {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// SHA-256 of the canonical JSON encoding, hex.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("configs always serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
