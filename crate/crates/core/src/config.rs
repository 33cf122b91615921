//! Declarative simulation configuration.
//!
//! The structs mirror the on-disk document section by section
//! (`[simulation]`, `[prevalence]`, `[[features]]`, ...). Unknown keys are
//! rejected during deserialization. Everything else is checked by
//! [`validate_config`], which reports all violations at once.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::rng::{derive_stream, RngStream};

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub simulation: SimulationSection,
    pub prevalence: PrevalenceSpec,
    #[serde(default)]
    pub features: Vec<FeatureSpec>,
    #[serde(default)]
    pub effects: EffectSpec,
    #[serde(default)]
    pub site_effects: SiteEffectSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subgroups: Vec<SubgroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal: Option<TemporalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missingness: Option<MissingSpec>,
    #[serde(default)]
    pub outcome: OutcomeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_samples: usize,
    pub n_sites: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_proportions: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

/// Per-site prevalence targets. Exactly one field must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrevalenceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_site: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_average: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrevalenceVariant<'a> {
    PerSite(&'a [f64]),
    Range(f64, f64),
    TargetAverage(f64),
}

impl PrevalenceSpec {
    /// The single configured variant, or `None` when zero or several are set.
    pub fn variant(&self) -> Option<PrevalenceVariant<'_>> {
        match (&self.per_site, self.range, self.target_average) {
            (Some(v), None, None) => Some(PrevalenceVariant::PerSite(v)),
            (None, Some((lo, hi)), None) => Some(PrevalenceVariant::Range(lo, hi)),
            (None, None, Some(avg)) => Some(PrevalenceVariant::TargetAverage(avg)),
            _ => None,
        }
    }

    /// Resolve per-site targets, drawing from `stream` for the random variants.
    ///
    /// `target_average` draws each site uniformly within ±0.1 of the mean
    /// (kept inside (0.01, 0.99)), then shifts all sites so the mean matches,
    /// clamping to (0.01, 0.99) afterwards.
    pub fn resolve(&self, n_sites: usize, stream: &mut RngStream) -> Vec<f64> {
        match self.variant() {
            Some(PrevalenceVariant::PerSite(v)) => v.to_vec(),
            Some(PrevalenceVariant::Range(lo, hi)) => (0..n_sites)
                .map(|_| lo + (hi - lo) * stream.next_open01())
                .collect(),
            Some(PrevalenceVariant::TargetAverage(avg)) => {
                let lo = (avg - 0.1).max(0.01);
                let hi = (avg + 0.1).min(0.99);
                let mut draws: Vec<f64> = (0..n_sites)
                    .map(|_| lo + (hi - lo) * stream.next_open01())
                    .collect();
                let shift = avg - draws.iter().sum::<f64>() / n_sites as f64;
                for d in &mut draws {
                    *d = (*d + shift).clamp(0.01, 0.99);
                }
                draws
            }
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRole {
    Predictive,
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Categorical { probabilities: Vec<f64> },
    /// A continuous marginal looked up by name in the generator registry.
    Custom { generator: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub role: FeatureRole,
    pub distribution: Distribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_correlation_group: Option<String>,
    /// Equicorrelation shared by the group; members must agree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_correlation: Option<f64>,
}

impl FeatureSpec {
    pub fn n_levels(&self) -> usize {
        match &self.distribution {
            Distribution::Categorical { probabilities } => probabilities.len(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Quadratic,
    Log,
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub feature: String,
    pub transform: Transform,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    #[default]
    Normal,
    /// Logistic with standard deviation `noise_sd`; with scale 1 the outcome
    /// model is an exact logistic regression in the main effects.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectSpec {
    pub main_effect_sd: f64,
    pub intercept: f64,
    pub interaction_max_order: u32,
    pub interaction_probability: f64,
    pub interaction_effect_sd: f64,
    pub scaling_enabled: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<TransformSpec>,
    pub noise_sd: f64,
    pub noise_distribution: NoiseDistribution,
    /// Main effects pinned by term name instead of sampled.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub fixed_main_effects: BTreeMap<String, f64>,
    pub interaction_cap: u64,
}

impl Default for EffectSpec {
    fn default() -> Self {
        Self {
            main_effect_sd: 0.5,
            intercept: 0.0,
            interaction_max_order: 2,
            interaction_probability: 0.5,
            interaction_effect_sd: 0.25,
            scaling_enabled: true,
            transforms: Vec::new(),
            noise_sd: 0.0,
            noise_distribution: NoiseDistribution::Normal,
            fixed_main_effects: BTreeMap::new(),
            interaction_cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiteEffectSpec {
    pub intercept_sd: f64,
    pub feature_interaction_sd: f64,
    pub feature_interaction_probability: f64,
}

impl Default for SiteEffectSpec {
    fn default() -> Self {
        Self {
            intercept_sd: 0.0,
            feature_interaction_sd: 0.0,
            feature_interaction_probability: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgroupSpec {
    pub variable: String,
    pub levels: Vec<String>,
    pub probabilities: Vec<f64>,
    /// Additive logit shift per level; empty means all zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub baseline_shifts: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feature_modifiers: Vec<FeatureModifier>,
}

impl SubgroupSpec {
    pub fn baseline_shift(&self, level: usize) -> f64 {
        self.baseline_shifts.get(level).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureModifier {
    pub feature: String,
    /// Additive adjustment to the feature's coefficient, one per level.
    pub adjustments: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeTimepoint {
    First,
    #[default]
    Last,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalSpec {
    pub n_timepoints: usize,
    pub continuous_ar_coefficient: f64,
    pub categorical_stay_probability: f64,
    pub outcome_timepoint: OutcomeTimepoint,
}

impl Default for TemporalSpec {
    fn default() -> Self {
        Self {
            n_timepoints: 1,
            continuous_ar_coefficient: 0.8,
            categorical_stay_probability: 0.9,
            outcome_timepoint: OutcomeTimepoint::Last,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissingSpec {
    pub per_feature_rates: BTreeMap<String, f64>,
    /// Keyed by site index ("0", "1", ...).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub per_site_multipliers: BTreeMap<String, f64>,
}

impl MissingSpec {
    pub fn site_multiplier(&self, site: usize) -> f64 {
        self.per_site_multipliers
            .iter()
            .find(|(k, _)| k.parse::<usize>().ok() == Some(site))
            .map(|(_, v)| *v)
            .unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutcomeSpec {
    pub label_temperature: f64,
    pub calibration_tolerance: f64,
    pub calibration_max_iterations: u32,
}

impl Default for OutcomeSpec {
    fn default() -> Self {
        Self {
            label_temperature: 0.05,
            calibration_tolerance: 1e-6,
            calibration_max_iterations: 200,
        }
    }
}

impl SimulationConfig {
    pub fn n_samples(&self) -> usize {
        self.simulation.n_samples
    }

    pub fn n_sites(&self) -> usize {
        self.simulation.n_sites
    }

    pub fn seed(&self) -> u64 {
        self.simulation.seed
    }

    pub fn n_timepoints(&self) -> usize {
        self.temporal.as_ref().map_or(1, |t| t.n_timepoints)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Per-site targets, drawn from the model-side prevalence stream.
    pub fn resolve_prevalence(&self) -> Vec<f64> {
        let mut stream = derive_stream(self.seed(), "model/prevalence");
        self.prevalence.resolve(self.n_sites(), &mut stream)
    }
}

/// One broken constraint, named by field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

struct Violations(Vec<Violation>);

impl Violations {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            field: field.into(),
            message: message.into(),
        });
    }

    fn check(&mut self, ok: bool, field: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.push(field, message);
        }
    }
}

fn is_prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

fn nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

fn check_simplex(v: &mut Violations, field: &str, probs: &[f64]) {
    if probs.iter().any(|p| !nonneg(*p)) {
        v.push(field, "probabilities must be finite and nonnegative");
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        v.push(field, format!("probabilities must sum to 1 (got {total})"));
    }
}

/// Check every invariant on the configuration. Empty means valid.
pub fn validate_config(cfg: &SimulationConfig) -> Vec<Violation> {
    let mut v = Violations(Vec::new());
    let n_sites = cfg.n_sites();

    v.check(cfg.n_samples() >= 1, "simulation.n_samples", "must be at least 1");
    v.check(n_sites >= 1, "simulation.n_sites", "must be at least 1");
    if let Some(props) = &cfg.simulation.site_proportions {
        v.check(
            props.len() == n_sites,
            "simulation.site_proportions",
            format!("length {} does not match n_sites {}", props.len(), n_sites),
        );
        v.check(
            props.iter().all(|p| nonneg(*p)),
            "simulation.site_proportions",
            "weights must be finite and nonnegative",
        );
        v.check(
            props.iter().sum::<f64>() > 0.0,
            "simulation.site_proportions",
            "weights must have a positive sum",
        );
    }

    validate_prevalence(&mut v, &cfg.prevalence, n_sites);
    validate_features(&mut v, cfg);
    validate_effects(&mut v, cfg);

    let se = &cfg.site_effects;
    v.check(nonneg(se.intercept_sd), "site_effects.intercept_sd", "must be finite and >= 0");
    v.check(
        nonneg(se.feature_interaction_sd),
        "site_effects.feature_interaction_sd",
        "must be finite and >= 0",
    );
    v.check(
        is_prob(se.feature_interaction_probability),
        "site_effects.feature_interaction_probability",
        "must lie in [0,1]",
    );

    validate_subgroups(&mut v, cfg);

    if let Some(t) = &cfg.temporal {
        v.check(t.n_timepoints >= 1, "temporal.n_timepoints", "must be at least 1");
        v.check(
            is_prob(t.continuous_ar_coefficient),
            "temporal.continuous_ar_coefficient",
            "must lie in [0,1]",
        );
        v.check(
            is_prob(t.categorical_stay_probability),
            "temporal.categorical_stay_probability",
            "must lie in [0,1]",
        );
    }

    if let Some(m) = &cfg.missingness {
        for (name, rate) in &m.per_feature_rates {
            let field = format!("missingness.per_feature_rates.{name}");
            v.check(cfg.feature(name).is_some(), field.clone(), "references an unknown feature");
            v.check(is_prob(*rate), field, "rate must lie in [0,1]");
        }
        for (site, mult) in &m.per_site_multipliers {
            let field = format!("missingness.per_site_multipliers.{site}");
            v.check(
                site.parse::<usize>().is_ok_and(|s| s < n_sites),
                field.clone(),
                "key must be a site index below n_sites",
            );
            v.check(nonneg(*mult), field, "multiplier must be finite and >= 0");
        }
    }

    let o = &cfg.outcome;
    v.check(nonneg(o.label_temperature), "outcome.label_temperature", "must be finite and >= 0");
    v.check(
        o.calibration_tolerance > 0.0 && o.calibration_tolerance.is_finite(),
        "outcome.calibration_tolerance",
        "must be > 0",
    );
    v.check(
        o.calibration_max_iterations >= 1,
        "outcome.calibration_max_iterations",
        "must be at least 1",
    );
    v.0
}

fn validate_prevalence(v: &mut Violations, p: &PrevalenceSpec, n_sites: usize) {
    let in_open = |x: f64| x > 0.0 && x < 1.0;
    match p.variant() {
        None => v.push("prevalence", "exactly one variant of per_site, range, target_average must be set"),
        Some(PrevalenceVariant::PerSite(targets)) => {
            v.check(
                targets.len() == n_sites,
                "prevalence.per_site",
                format!("length {} does not match n_sites {}", targets.len(), n_sites),
            );
            for (i, t) in targets.iter().enumerate() {
                v.check(
                    in_open(*t),
                    format!("prevalence.per_site[{i}]"),
                    "prevalence target must lie in (0,1)",
                );
            }
        }
        Some(PrevalenceVariant::Range(lo, hi)) => {
            v.check(
                in_open(lo) && in_open(hi) && lo <= hi,
                "prevalence.range",
                "prevalence target must lie in (0,1) with low <= high",
            );
        }
        Some(PrevalenceVariant::TargetAverage(avg)) => {
            v.check(
                in_open(avg),
                "prevalence.target_average",
                "prevalence target must lie in (0,1)",
            );
        }
    }
}

fn validate_features(v: &mut Violations, cfg: &SimulationConfig) {
    let mut seen = BTreeSet::new();
    let mut groups: BTreeMap<&str, Vec<Option<f64>>> = BTreeMap::new();
    for (i, f) in cfg.features.iter().enumerate() {
        let field = format!("features[{i}]");
        v.check(!f.name.is_empty(), format!("{field}.name"), "feature names must be nonempty");
        v.check(
            !f.name.contains(['=', ',', '"', '\n', '\r']),
            format!("{field}.name"),
            "feature names must not contain '=', ',', quotes or newlines",
        );
        v.check(
            seen.insert(f.name.as_str()),
            format!("{field}.name"),
            format!("duplicate feature name '{}'", f.name),
        );
        match (&f.kind, &f.distribution) {
            (FeatureKind::Continuous, Distribution::Normal { mean, sd }) => {
                v.check(mean.is_finite(), format!("{field}.distribution"), "mean must be finite");
                v.check(
                    *sd > 0.0 && sd.is_finite(),
                    format!("{field}.distribution"),
                    "normal sd must be > 0",
                );
            }
            (FeatureKind::Continuous, Distribution::Uniform { low, high }) => v.check(
                low.is_finite() && high.is_finite() && low < high,
                format!("{field}.distribution"),
                "uniform requires low < high",
            ),
            (FeatureKind::Continuous, Distribution::Custom { generator }) => v.check(
                !generator.is_empty(),
                format!("{field}.distribution"),
                "custom generator name must be nonempty",
            ),
            (FeatureKind::Categorical, Distribution::Categorical { probabilities }) => {
                v.check(
                    probabilities.len() >= 2,
                    format!("{field}.distribution"),
                    "categorical features need at least 2 levels",
                );
                check_simplex(v, &format!("{field}.distribution.probabilities"), probabilities);
            }
            _ => v.push(
                format!("{field}.distribution"),
                "distribution does not match the feature kind",
            ),
        }
        if let Some(group) = &f.noise_correlation_group {
            v.check(
                f.role == FeatureRole::Noise && f.kind == FeatureKind::Continuous,
                format!("{field}.noise_correlation_group"),
                "noise_correlation_group is only permitted on continuous noise features",
            );
            groups.entry(group.as_str()).or_default().push(f.noise_correlation);
        } else {
            v.check(
                f.noise_correlation.is_none(),
                format!("{field}.noise_correlation"),
                "noise_correlation requires noise_correlation_group",
            );
        }
        if let Some(rho) = f.noise_correlation {
            v.check(
                (0.0..1.0).contains(&rho),
                format!("{field}.noise_correlation"),
                "noise correlation must lie in [0,1)",
            );
        }
    }
    for (group, rhos) in groups {
        let first = rhos[0];
        v.check(
            rhos.iter().all(|r| *r == first),
            format!("noise_correlation_group.{group}"),
            "members of a group must share one noise_correlation",
        );
    }
}

fn validate_effects(v: &mut Violations, cfg: &SimulationConfig) {
    let e = &cfg.effects;
    v.check(nonneg(e.main_effect_sd), "effects.main_effect_sd", "must be finite and >= 0");
    v.check(e.intercept.is_finite(), "effects.intercept", "must be finite");
    v.check(e.interaction_max_order >= 1, "effects.interaction_max_order", "must be at least 1");
    v.check(
        is_prob(e.interaction_probability),
        "effects.interaction_probability",
        "must lie in [0,1]",
    );
    v.check(
        nonneg(e.interaction_effect_sd),
        "effects.interaction_effect_sd",
        "must be finite and >= 0",
    );
    v.check(nonneg(e.noise_sd), "effects.noise_sd", "must be finite and >= 0");
    v.check(e.interaction_cap >= 1, "effects.interaction_cap", "must be at least 1");

    let mut transformed = BTreeSet::new();
    for (i, t) in e.transforms.iter().enumerate() {
        let field = format!("effects.transforms[{i}]");
        match cfg.feature(&t.feature) {
            None => v.push(field, format!("unknown feature '{}'", t.feature)),
            Some(f) => {
                v.check(
                    f.kind == FeatureKind::Continuous && f.role == FeatureRole::Predictive,
                    field.clone(),
                    "transforms require continuous predictive features",
                );
                v.check(
                    transformed.insert(t.feature.as_str()),
                    field,
                    format!("feature '{}' has more than one transform", t.feature),
                );
            }
        }
    }

    let terms: BTreeSet<String> = predictive_term_names(&cfg.features).into_iter().collect();
    for (name, beta) in &e.fixed_main_effects {
        let field = format!("effects.fixed_main_effects.{name}");
        v.check(terms.contains(name), field.clone(), "must name a predictive feature term");
        v.check(beta.is_finite(), field, "must be finite");
    }
}

fn validate_subgroups(v: &mut Violations, cfg: &SimulationConfig) {
    let mut vars = BTreeSet::new();
    for (i, g) in cfg.subgroups.iter().enumerate() {
        let field = format!("subgroups[{i}]");
        v.check(!g.variable.is_empty(), format!("{field}.variable"), "must be nonempty");
        v.check(
            vars.insert(g.variable.as_str()),
            format!("{field}.variable"),
            format!("duplicate subgroup variable '{}'", g.variable),
        );
        v.check(
            cfg.feature(&g.variable).is_none(),
            format!("{field}.variable"),
            "subgroup variable clashes with a feature name",
        );
        v.check(!g.levels.is_empty(), format!("{field}.levels"), "need at least one level");
        v.check(
            g.probabilities.len() == g.levels.len(),
            format!("{field}.probabilities"),
            "one probability per level required",
        );
        check_simplex(v, &format!("{field}.probabilities"), &g.probabilities);
        v.check(
            g.baseline_shifts.is_empty() || g.baseline_shifts.len() == g.levels.len(),
            format!("{field}.baseline_shifts"),
            "one shift per level required",
        );
        for (j, m) in g.feature_modifiers.iter().enumerate() {
            let mfield = format!("{field}.feature_modifiers[{j}]");
            match cfg.feature(&m.feature) {
                None => v.push(mfield.clone(), format!("unknown feature '{}'", m.feature)),
                Some(f) => v.check(
                    f.role == FeatureRole::Predictive,
                    mfield.clone(),
                    "modifiers may only target predictive features",
                ),
            }
            v.check(
                m.adjustments.len() == g.levels.len(),
                mfield,
                "one adjustment per level required",
            );
        }
    }
}

/// Names of the model terms contributed by the predictive features.
///
/// A continuous feature contributes one term named after it. A categorical
/// feature with `C` levels contributes `name=1 .. name=C-1` (level 0 is the
/// reference).
pub fn predictive_term_names(features: &[FeatureSpec]) -> Vec<String> {
    let mut out = Vec::new();
    for f in features.iter().filter(|f| f.role == FeatureRole::Predictive) {
        match f.kind {
            FeatureKind::Continuous => out.push(f.name.clone()),
            FeatureKind::Categorical => {
                for level in 1..f.n_levels() {
                    out.push(term_name(&f.name, Some(level)));
                }
            }
        }
    }
    out
}

pub fn term_name(feature: &str, level: Option<usize>) -> String {
    match level {
        None => feature.to_string(),
        Some(l) => format!("{feature}={l}"),
    }
}
