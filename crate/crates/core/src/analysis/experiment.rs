//! Held-out-site generalisability experiment.
//!
//! For every site-feature interaction SD on the grid and every trial, a
//! fresh dataset is generated, a random subset of sites is held out, each
//! learner is scored by k-fold CV on the remaining sites (internal) and,
//! refitted on all of them, on the held-out records (external).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::cv::{cross_validate, Learner};
use super::design::{build_design, DesignOptions};
use super::metrics::{auroc, mean, sample_sd};
use crate::config::SimulationConfig;
use crate::dataset::simulate;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, derive_stream};

pub const MAX_HOLDOUT_ATTEMPTS: u32 = 10;

/// How learners see which site a record came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteEncoding {
    /// Not at all.
    None,
    /// The integer site column as exported.
    #[default]
    Code,
    /// One indicator per training site but the first; held-out sites are
    /// all-zero.
    Indicators,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    /// Site-feature interaction SDs, reported in this order.
    pub grid: Vec<f64>,
    pub holdout_fraction: f64,
    pub n_trials: usize,
    pub learners: Vec<Learner>,
    pub k_folds: usize,
    #[serde(default)]
    pub site_encoding: SiteEncoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub model: String,
    pub interaction_sd: f64,
    pub trial: usize,
    pub seed: u64,
    pub holdout_sites: Vec<usize>,
    pub holdout_attempts: u32,
    pub internal_auroc: f64,
    pub external_auroc: f64,
    pub degradation: f64,
    pub n_internal: usize,
    pub n_external: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationRow {
    pub model: String,
    pub interaction_sd: f64,
    pub internal_auroc_mean: f64,
    pub external_auroc_mean: f64,
    pub degradation_mean: f64,
    pub degradation_sd: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationTable {
    pub rows: Vec<DegradationRow>,
    pub trials: Vec<TrialRecord>,
}

impl DegradationTable {
    pub fn row(&self, model: &str, interaction_sd: f64) -> Option<&DegradationRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.interaction_sd == interaction_sd)
    }

    /// Per-trial degradations for one cell, in trial order.
    pub fn degradations(&self, model: &str, interaction_sd: f64) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| t.model == model && t.interaction_sd == interaction_sd)
            .map(|t| t.degradation)
            .collect()
    }
}

/// Dataset seed of one grid cell and trial.
pub fn trial_seed(base_seed: u64, interaction_sd: f64, trial: usize) -> u64 {
    derive_seed(
        base_seed,
        &format!("experiment/interaction_sd={:016x}/trial={trial}", interaction_sd.to_bits()),
    )
}

pub fn holdout_count(n_sites: usize, fraction: f64) -> usize {
    libm::ceil(fraction * n_sites as f64 - 1e-9) as usize
}

pub fn check_settings(base: &SimulationConfig, settings: &ExperimentSettings) -> Result<()> {
    let n_sites = base.n_sites();
    if n_sites < 5 {
        return Err(Error::InvalidParameter(format!(
            "the experiment needs at least 5 sites, config has {n_sites}"
        )));
    }
    if settings.grid.is_empty() || settings.learners.is_empty() || settings.n_trials == 0 {
        return Err(Error::InvalidParameter(
            "grid, learners and trials must be nonempty".into(),
        ));
    }
    if settings.grid.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::InvalidParameter("grid values must be finite and >= 0".into()));
    }
    let h = holdout_count(n_sites, settings.holdout_fraction);
    if !(settings.holdout_fraction > 0.0) || h == 0 || h >= n_sites {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction {} leaves no training or no held-out sites",
            settings.holdout_fraction
        )));
    }
    Ok(())
}

/// Run every learner on one (grid value, trial) cell.
pub fn run_trial(
    base: &SimulationConfig,
    settings: &ExperimentSettings,
    interaction_sd: f64,
    trial: usize,
) -> Result<Vec<TrialRecord>> {
    check_settings(base, settings)?;
    let seed = trial_seed(base.seed(), interaction_sd, trial);
    let mut cfg = base.clone();
    cfg.simulation.seed = seed;
    cfg.site_effects.feature_interaction_sd = interaction_sd;
    let sim = simulate(&cfg)?;
    let ds = &sim.dataset;
    let n_sites = ds.n_sites;
    let h = holdout_count(n_sites, settings.holdout_fraction);

    let has_both = |rows: &[usize]| {
        let pos = rows.iter().filter(|&&i| ds.outcomes[i] != 0).count();
        pos > 0 && pos < rows.len()
    };
    let mut chosen = None;
    for attempt in 0..MAX_HOLDOUT_ATTEMPTS {
        let mut order: Vec<usize> = (0..n_sites).collect();
        derive_stream(seed, &format!("analysis/holdout/attempt={attempt}")).shuffle(&mut order);
        let mut held: Vec<usize> = order[..h].to_vec();
        held.sort_unstable();
        let (external, internal): (Vec<usize>, Vec<usize>) =
            (0..ds.n_patients()).partition(|&i| held.contains(&ds.sites()[i]));
        if has_both(&external) && has_both(&internal) {
            chosen = Some((held, attempt + 1, internal, external));
            break;
        }
    }
    let (held, attempts, internal, external) =
        chosen.ok_or(Error::HoldoutFailed(MAX_HOLDOUT_ATTEMPTS))?;

    let training_sites: Vec<usize> = (0..n_sites).filter(|s| !held.contains(s)).collect();
    let options = DesignOptions {
        intercept: true,
        transforms: Default::default(),
        features: None,
        demographics: true,
        site_levels: (settings.site_encoding == SiteEncoding::Indicators).then_some(training_sites),
        site_code: settings.site_encoding == SiteEncoding::Code,
    };
    let train = build_design(ds, &options, Some(&internal))?;
    let test = build_design(ds, &options, Some(&external))?;

    let mut records = Vec::with_capacity(settings.learners.len());
    for learner in &settings.learners {
        // Every learner sees the same folds.
        let mut stream = derive_stream(seed, "analysis/cv");
        let cv = cross_validate(learner, &train.design, &train.labels, settings.k_folds, &mut stream)?;
        let fitted = learner.fit(&train.design, &train.labels)?;
        let external_auroc = auroc(&fitted.predict(&test.design), &test.labels)?;
        records.push(TrialRecord {
            model: String::from(learner.name()),
            interaction_sd,
            trial,
            seed,
            holdout_sites: held.clone(),
            holdout_attempts: attempts,
            internal_auroc: cv.mean_auroc,
            external_auroc,
            degradation: cv.mean_auroc - external_auroc,
            n_internal: train.rows.len(),
            n_external: test.rows.len(),
        });
    }
    Ok(records)
}

/// Average trial records into one row per (learner, grid value).
pub fn aggregate(settings: &ExperimentSettings, mut records: Vec<TrialRecord>) -> DegradationTable {
    let model_rank = |m: &str| settings.learners.iter().position(|l| l.name() == m);
    let grid_rank = |s: f64| settings.grid.iter().position(|g| g.to_bits() == s.to_bits());
    records.sort_by_key(|r| (model_rank(&r.model), grid_rank(r.interaction_sd), r.trial));

    let mut rows = Vec::new();
    for learner in &settings.learners {
        for &sd in &settings.grid {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.model == learner.name() && r.interaction_sd.to_bits() == sd.to_bits())
                .collect();
            let internal: Vec<f64> = cell.iter().map(|r| r.internal_auroc).collect();
            let external: Vec<f64> = cell.iter().map(|r| r.external_auroc).collect();
            let degradation: Vec<f64> = cell.iter().map(|r| r.degradation).collect();
            rows.push(DegradationRow {
                model: String::from(learner.name()),
                interaction_sd: sd,
                internal_auroc_mean: mean(&internal),
                external_auroc_mean: mean(&external),
                degradation_mean: mean(&degradation),
                degradation_sd: sample_sd(&degradation),
                n_trials: cell.len(),
            });
        }
    }
    DegradationTable { rows, trials: records }
}

/// Cells in the canonical (grid value, trial) order.
pub fn cells(settings: &ExperimentSettings) -> Vec<(f64, usize)> {
    settings
        .grid
        .iter()
        .flat_map(|&sd| (0..settings.n_trials).map(move |t| (sd, t)))
        .collect()
}

/// Serial run of the whole experiment.
pub fn generalisability_experiment(
    base: &SimulationConfig,
    settings: &ExperimentSettings,
) -> Result<DegradationTable> {
    check_settings(base, settings)?;
    let mut records = Vec::new();
    for (sd, trial) in cells(settings) {
        records.extend(run_trial(base, settings, sd, trial)?);
    }
    Ok(aggregate(settings, records))
}
