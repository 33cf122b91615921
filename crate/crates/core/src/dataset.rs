//! End-to-end generation: model, patients, outcomes, missingness.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::{validate_config, OutcomeTimepoint, SimulationConfig};
use crate::error::{Error, Result};
use crate::features::{
    assign_sites, extend_temporal, generate_cross_sectional, generate_demographics, FeatureMatrix,
    GeneratorRegistry,
};
use crate::missing::{inject_missing, missing_rates, MissingMask};
use crate::model::{draw_noise, sample_ground_truth, GroundTruthModel, LinearPredictor, Record};
use crate::outcome::{assign_outcomes, calibrate_sites, OutcomeCalibration};
use crate::rng::derive_stream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemographicVariable {
    pub name: String,
    pub levels: Vec<String>,
}

/// Generated records plus the calibration that produced their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Complete values; cells flagged in `missing` are exported as empty.
    pub features: FeatureMatrix,
    pub missing: MissingMask,
    pub demographic_variables: Vec<DemographicVariable>,
    pub n_sites: usize,
    /// Timepoint whose features fed the risk model.
    pub outcome_timepoint: usize,
    /// One label per patient.
    pub outcomes: Vec<u8>,
    /// Linear predictor per patient; empty for datasets loaded from disk.
    pub linear_predictor: Vec<f64>,
    pub calibration: Option<OutcomeCalibration>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn n_patients(&self) -> usize {
        self.features.n_rows
    }

    pub fn sites(&self) -> &[usize] {
        &self.features.sites
    }

    pub fn site_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_sites];
        for &s in self.sites() {
            counts[s] += 1;
        }
        counts
    }

    /// Observed outcome rate per site (`None` for empty sites).
    pub fn site_prevalence(&self) -> Vec<Option<f64>> {
        let mut positives = vec![0usize; self.n_sites];
        for (&s, &y) in self.sites().iter().zip(&self.outcomes) {
            positives[s] += usize::from(y);
        }
        self.site_counts()
            .into_iter()
            .zip(positives)
            .map(|(n, k)| (n > 0).then(|| k as f64 / n as f64))
            .collect()
    }

    pub fn is_missing(&self, row: usize, t: usize, col: usize) -> bool {
        self.missing.cells[self.features.index(row, t, col)]
    }

    /// Observed value, `None` when masked.
    pub fn observed(&self, row: usize, t: usize, col: usize) -> Option<f64> {
        (!self.is_missing(row, t, col)).then(|| self.features.value(row, t, col))
    }

    pub fn missing_rates(&self) -> Vec<f64> {
        missing_rates(&self.features, &self.missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub model: GroundTruthModel,
    pub dataset: Dataset,
}

/// Generate with the built-in feature generators only.
pub fn simulate(cfg: &SimulationConfig) -> Result<Simulation> {
    simulate_with(cfg, &GeneratorRegistry::new())
}

pub fn simulate_with(cfg: &SimulationConfig, registry: &GeneratorRegistry) -> Result<Simulation> {
    let violations = validate_config(cfg);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }
    let seed = cfg.seed();
    let n = cfg.n_samples();
    let model = sample_ground_truth(cfg)?;

    let (sites, warnings) = assign_sites(
        n,
        cfg.n_sites(),
        cfg.simulation.site_proportions.as_deref(),
        &mut derive_stream(seed, "data/sites"),
    )?;
    let demographics = generate_demographics(&cfg.subgroups, n, seed)?;

    let mut matrix = generate_cross_sectional(&cfg.features, n, seed, registry)?;
    let outcome_timepoint = match &cfg.temporal {
        Some(t) if t.n_timepoints > 1 => {
            matrix = extend_temporal(&matrix, &cfg.features, t, seed, registry)?;
            match t.outcome_timepoint {
                OutcomeTimepoint::First => 0,
                OutcomeTimepoint::Last => t.n_timepoints - 1,
            }
        }
        _ => 0,
    };
    matrix.sites = sites;
    matrix.demographics = demographics;
    matrix.n_demographics = cfg.subgroups.len();

    let big_t = matrix.n_timepoints;
    let noise = draw_noise(&model, &mut derive_stream(seed, "data/epsilon"), n * big_t);
    let predictor = LinearPredictor::new(&model, &matrix.columns, &cfg.subgroups)?;
    let etas: Vec<f64> = (0..n)
        .map(|i| {
            let record = Record {
                features: matrix.record(i, outcome_timepoint),
                site: matrix.sites[i],
                demographics: matrix.demographic_levels(i),
            };
            predictor.eval(&record, noise[i * big_t + outcome_timepoint])
        })
        .collect();

    let o = &cfg.outcome;
    let calibration = calibrate_sites(
        &etas,
        &matrix.sites,
        &model.prevalence_targets,
        o.label_temperature,
        o.calibration_tolerance,
        o.calibration_max_iterations,
    )?;
    let outcomes = assign_outcomes(
        &etas,
        &matrix.sites,
        &calibration,
        &mut derive_stream(seed, "data/labels"),
    )?;

    let missing = match &cfg.missingness {
        Some(spec) => inject_missing(&matrix, spec, seed),
        None => MissingMask::none(matrix.values.len()),
    };

    let dataset = Dataset {
        features: matrix,
        missing,
        demographic_variables: cfg
            .subgroups
            .iter()
            .map(|g| DemographicVariable {
                name: g.variable.clone(),
                levels: g.levels.clone(),
            })
            .collect(),
        n_sites: cfg.n_sites(),
        outcome_timepoint,
        outcomes,
        linear_predictor: etas,
        calibration: Some(calibration),
        warnings,
    };
    Ok(Simulation { model, dataset })
}
