//! Effect-recovery and prevalence reports.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::design::{build_design, DesignOptions};
use super::logistic::fit_logistic_irls;
use super::metrics::{bootstrap_ci, median};
use crate::config::{term_name, FeatureKind, FeatureRole, NoiseDistribution};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::GroundTruthModel;
use crate::rng::derive_stream;

/// Largest label temperature accepted by the recovery report.
pub const MAX_RECOVERY_TEMPERATURE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub term: String,
    pub true_effect: f64,
    pub recovered_effect: f64,
    pub std_error: f64,
    pub absolute_error: f64,
    /// `None` when the true effect is zero.
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// Predictive main-effect terms.
    pub rows: Vec<RecoveryRow>,
    /// Noise-feature terms; true effect 0.
    pub noise_rows: Vec<RecoveryRow>,
    pub n_samples: usize,
    /// Complete-case rows used by the fit.
    pub n_used: usize,
    /// Ground-truth coefficients are divided by this before comparison: the
    /// logistic scale of the predictor noise, which sets the label model's
    /// logit scale.
    pub effect_scale: f64,
    pub median_relative_error: f64,
    pub converged: bool,
    pub separation: bool,
}

/// Reasons recovered main effects would not estimate the configured ones.
pub fn recovery_obstacles(model: &GroundTruthModel, temperature: f64) -> Vec<String> {
    let mut out = Vec::new();
    if !model.interactions.is_empty() {
        out.push(format!("{} interaction terms are present", model.interactions.len()));
    }
    if model
        .site_effects
        .iter()
        .any(|s| s.intercept_shift != 0.0 || s.feature_adjustments.values().any(|&a| a != 0.0))
    {
        out.push("site intercept shifts or site-feature adjustments are nonzero".into());
    }
    if model
        .subgroup_effects
        .iter()
        .any(|g| g.baseline_shift != 0.0 || g.feature_adjustments.values().any(|&a| a != 0.0))
    {
        out.push("subgroup effects are nonzero".into());
    }
    if model.noise_distribution != NoiseDistribution::Logistic || !(model.noise_sd > 0.0) {
        out.push(
            "predictor noise must be logistic with positive sd for labels to follow a logistic model"
                .into(),
        );
    }
    if !(temperature <= MAX_RECOVERY_TEMPERATURE) {
        out.push(format!(
            "label temperature {temperature} exceeds {MAX_RECOVERY_TEMPERATURE}"
        ));
    }
    out
}

/// Refit a logistic regression on the generating feature map and compare.
///
/// The fit includes site indicators because per-site thresholds act as site
/// intercepts. Refuses datasets whose configuration makes the main effects
/// non-identifiable as specified.
pub fn effect_recovery_report(
    dataset: &Dataset,
    model: &GroundTruthModel,
    temperature: f64,
    ridge: f64,
) -> Result<RecoveryReport> {
    let obstacles = recovery_obstacles(model, temperature);
    if !obstacles.is_empty() {
        return Err(Error::NotIdentifiable(obstacles.join("; ")));
    }
    let scale = model.logistic_noise_scale().unwrap_or(1.0);
    let present: Vec<usize> = dataset
        .site_counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, _)| s)
        .collect();
    let options = DesignOptions {
        intercept: true,
        transforms: model.transforms.clone(),
        features: None,
        demographics: false,
        site_levels: Some(present),
        site_code: false,
    };
    let data = build_design(dataset, &options, None)?;
    let fit = fit_logistic_irls(&data.design, &data.labels, ridge)?;

    let row = |term: String, truth: f64| -> Result<RecoveryRow> {
        let recovered = fit
            .coefficient(&term)
            .ok_or_else(|| Error::InvalidParameter(format!("term '{term}' missing from design")))?;
        let absolute_error = (recovered - truth).abs();
        Ok(RecoveryRow {
            std_error: fit.std_error(&term).unwrap_or(f64::NAN),
            relative_error: (truth != 0.0).then(|| absolute_error / truth.abs()),
            term,
            true_effect: truth,
            recovered_effect: recovered,
            absolute_error,
        })
    };

    let rows = model
        .terms
        .iter()
        .map(|t| row(t.name.clone(), model.main_effect(&t.name) / scale))
        .collect::<Result<Vec<_>>>()?;
    let mut noise_rows = Vec::new();
    for c in dataset.features.columns.iter().filter(|c| c.role == FeatureRole::Noise) {
        match c.kind {
            FeatureKind::Continuous => noise_rows.push(row(term_name(&c.name, None), 0.0)?),
            FeatureKind::Categorical => {
                for level in 1..c.n_levels {
                    noise_rows.push(row(term_name(&c.name, Some(level)), 0.0)?);
                }
            }
        }
    }
    let relative: Vec<f64> = rows.iter().filter_map(|r| r.relative_error).collect();
    Ok(RecoveryReport {
        median_relative_error: median(&relative),
        rows,
        noise_rows,
        n_samples: dataset.n_patients(),
        n_used: data.rows.len(),
        effect_scale: scale,
        converged: fit.converged,
        separation: fit.separation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceRow {
    pub site: usize,
    pub target: f64,
    pub observed: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_site: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceReport {
    pub rows: Vec<PrevalenceRow>,
    pub mean_absolute_deviation: f64,
    pub bootstrap_resamples: usize,
    pub level: f64,
}

/// Observed prevalence per site against its target, with percentile
/// bootstrap intervals when `resamples > 0`.
pub fn prevalence_report(
    dataset: &Dataset,
    targets: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<PrevalenceReport> {
    if targets.len() != dataset.n_sites {
        return Err(Error::InvalidParameter(format!(
            "{} targets for {} sites",
            targets.len(),
            dataset.n_sites
        )));
    }
    let mut per_site: Vec<Vec<u8>> = (0..dataset.n_sites).map(|_| Vec::new()).collect();
    for (&s, &y) in dataset.sites().iter().zip(&dataset.outcomes) {
        per_site[s].push(y);
    }
    let mut rows = Vec::with_capacity(dataset.n_sites);
    for (site, outcomes) in per_site.iter().enumerate() {
        if outcomes.is_empty() {
            return Err(Error::EmptySite(site));
        }
        let observed = outcomes.iter().filter(|&&y| y != 0).count() as f64 / outcomes.len() as f64;
        let (ci_low, ci_high) = if resamples > 0 {
            let mut stream = derive_stream(seed, &format!("analysis/bootstrap/site/{site}"));
            let (lo, hi) = bootstrap_ci(outcomes, resamples, level, &mut stream)?;
            (Some(lo), Some(hi))
        } else {
            (None, None)
        };
        rows.push(PrevalenceRow {
            site,
            target: targets[site],
            observed,
            ci_low,
            ci_high,
            n_site: outcomes.len(),
        });
    }
    let mad = rows.iter().map(|r| (r.observed - r.target).abs()).sum::<f64>() / rows.len() as f64;
    Ok(PrevalenceReport {
        rows,
        mean_absolute_deviation: mad,
        bootstrap_resamples: resamples,
        level,
    })
}
