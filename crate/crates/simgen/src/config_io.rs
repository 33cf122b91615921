//! Reading configuration documents and hashing the effective config.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use simgen_core::config::validate_config;
use simgen_core::{SimulationConfig, Violation};

use crate::error::{CliError, CliResult};

/// Parse a config document. JSON when it starts with `{`, TOML otherwise.
pub fn parse_config(text: &str) -> CliResult<SimulationConfig> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("invalid JSON config: {e}")))
    } else {
        toml::from_str(text).map_err(|e| CliError::input(format!("invalid TOML config: {e}")))
    }
}

pub fn read_config(path: &Path) -> CliResult<SimulationConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text).map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
}

/// Read, apply the seed override and validate.
pub fn load_config(path: &Path, seed: Option<u64>) -> CliResult<SimulationConfig> {
    let mut cfg = read_config(path)?;
    if let Some(seed) = seed {
        cfg.simulation.seed = seed;
    }
    check(&cfg)?;
    Ok(cfg)
}

pub fn check(cfg: &SimulationConfig) -> CliResult<()> {
    let violations = validate_config(cfg);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(simgen_core::Error::InvalidConfig(violations).into())
    }
}

pub fn violations(cfg: &SimulationConfig) -> Vec<Violation> {
    validate_config(cfg)
}

/// Canonical JSON of a config: struct fields in declaration order, maps sorted.
pub fn canonical_json(cfg: &SimulationConfig) -> String {
    serde_json::to_string(cfg).expect("config serializes")
}

/// Lowercase hex SHA-256 of the canonical JSON.
pub fn config_hash(cfg: &SimulationConfig) -> String {
    let digest = Sha256::digest(canonical_json(cfg).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
