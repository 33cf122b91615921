//! Dataset metadata document written next to the CSV.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use simgen_core::rng::PRNG_DESCRIPTION;
use simgen_core::{
    Dataset, GroundTruthModel, Simulation, SimulationConfig, GENERATOR_NAME, GENERATOR_VERSION,
};

use crate::config_io::{check, config_hash};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const SITE_FEATURE_NOTE: &str =
    "site-feature adjustments are order-1 modifications and are not divided by sqrt(order)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub version: String,
    pub prng: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub thresholds: Vec<Option<f64>>,
    pub temperatures: Vec<f64>,
    pub residuals: Vec<Option<f64>>,
    pub targets: Vec<f64>,
    pub achieved_expected_prevalence: Vec<Option<f64>>,
    pub iterations: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observed {
    pub per_site_prevalence: Vec<Option<f64>>,
    pub per_site_counts: Vec<usize>,
    /// Masked fraction per feature over all patient-timepoints.
    pub missing_rates: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub generator: Generator,
    pub seed: u64,
    pub config_hash: String,
    pub config_echo: SimulationConfig,
    pub ground_truth: GroundTruthModel,
    pub ground_truth_notes: Vec<String>,
    pub calibration: CalibrationSummary,
    pub observed: Observed,
    pub warnings: Vec<String>,
}

impl Metadata {
    pub fn new(cfg: &SimulationConfig, sim: &Simulation) -> Self {
        let ds = &sim.dataset;
        let cal = ds.calibration.as_ref().expect("generated datasets are calibrated");
        Self {
            schema_version: SCHEMA_VERSION,
            generator: Generator {
                name: GENERATOR_NAME.into(),
                version: GENERATOR_VERSION.into(),
                prng: PRNG_DESCRIPTION.into(),
            },
            seed: cfg.seed(),
            config_hash: config_hash(cfg),
            config_echo: cfg.clone(),
            ground_truth: sim.model.clone(),
            ground_truth_notes: vec![SITE_FEATURE_NOTE.into()],
            calibration: CalibrationSummary {
                thresholds: cal.thresholds.clone(),
                temperatures: vec![cal.temperature; cal.thresholds.len()],
                residuals: cal.residuals(),
                targets: cal.targets.clone(),
                achieved_expected_prevalence: cal.achieved_expected_prevalence.clone(),
                iterations: cal.iterations_used.clone(),
            },
            observed: observed(ds),
            warnings: ds.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let meta: Self = serde_json::from_str(text)
            .map_err(|e| CliError::input(format!("malformed metadata: {e}")))?;
        if meta.schema_version != SCHEMA_VERSION {
            return Err(CliError::input(format!(
                "unsupported metadata schema version {}",
                meta.schema_version
            )));
        }
        check(&meta.config_echo)?;
        if meta.config_hash != config_hash(&meta.config_echo) {
            return Err(CliError::input("metadata config_hash does not match config_echo"));
        }
        Ok(meta)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError {
            code: e.code,
            message: format!("{}: {}", path.display(), e.message),
        })
    }
}

pub fn observed(ds: &Dataset) -> Observed {
    Observed {
        per_site_prevalence: ds.site_prevalence(),
        per_site_counts: ds.site_counts(),
        missing_rates: ds
            .features
            .columns
            .iter()
            .map(|c| c.name.clone())
            .zip(ds.missing_rates())
            .collect(),
    }
}
