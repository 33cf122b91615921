//! The frozen ground-truth risk model and its linear predictor.
//!
//! `eta = b0 + delta_site + sum_g shift(g) + sum_j (beta_j + site_adj_j +
//! sum_g subgroup_adj_gj) * phi_j(x_j) + sum_k gamma_k * prod_{j in k}
//! phi_j(x_j) + eps`, with `phi_j` the feature's transform (identity when
//! none) and categoricals entering as indicators of non-reference levels.
//! Interaction coefficients are stored already scaled by `1/sqrt(order)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::{
    term_name, FeatureKind, FeatureRole, FeatureSpec, NoiseDistribution, SimulationConfig,
    SubgroupSpec, Transform,
};
use crate::error::{Error, Result};
use crate::features::ColumnInfo;
use crate::math::{binomial, sigmoid};
use crate::rng::{derive_stream, RngStream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureTerm {
    pub name: String,
    pub feature: String,
    /// Non-reference level for categorical terms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionTerm {
    pub members: Vec<String>,
    pub order: u32,
    pub base_effect: f64,
    pub scaled_effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteEffect {
    pub site: usize,
    pub intercept_shift: f64,
    pub feature_adjustments: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupEffect {
    pub variable: String,
    pub level: String,
    pub level_index: usize,
    pub baseline_shift: f64,
    pub feature_adjustments: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthModel {
    pub intercept: f64,
    /// Predictive terms in configuration order.
    pub terms: Vec<FeatureTerm>,
    pub main_effects: BTreeMap<String, f64>,
    pub interactions: Vec<InteractionTerm>,
    pub transforms: BTreeMap<String, Transform>,
    pub site_effects: Vec<SiteEffect>,
    pub subgroup_effects: Vec<SubgroupEffect>,
    pub noise_sd: f64,
    pub noise_distribution: NoiseDistribution,
    pub scaling_enabled: bool,
    pub prevalence_targets: Vec<f64>,
}

impl GroundTruthModel {
    /// Main-effect coefficient of a term; 0 for anything not in the model.
    pub fn main_effect(&self, term: &str) -> f64 {
        self.main_effects.get(term).copied().unwrap_or(0.0)
    }

    pub fn site_adjustment(&self, site: usize, term: &str) -> f64 {
        self.site_effects
            .get(site)
            .and_then(|s| s.feature_adjustments.get(term))
            .copied()
            .unwrap_or(0.0)
    }

    /// Logistic scale of the predictor noise (`sd * sqrt(3) / pi`), when logistic.
    pub fn logistic_noise_scale(&self) -> Option<f64> {
        match self.noise_distribution {
            NoiseDistribution::Logistic => Some(self.noise_sd * libm::sqrt(3.0) / core::f64::consts::PI),
            NoiseDistribution::Normal => None,
        }
    }
}

/// Order scaling of interaction coefficients: `gamma / sqrt(order)` when enabled.
#[inline]
pub fn scale_interaction(gamma: f64, order: u32, scaling_enabled: bool) -> f64 {
    if scaling_enabled {
        gamma / libm::sqrt(f64::from(order))
    } else {
        gamma
    }
}

#[inline]
pub fn apply_transform(x: f64, transform: Transform) -> f64 {
    match transform {
        Transform::Quadratic => x * x,
        Transform::Log => {
            let y = libm::log1p(x.abs());
            if x < 0.0 {
                -y
            } else {
                y
            }
        }
        Transform::Exponential => libm::exp(x.clamp(-10.0, 10.0)),
    }
}

#[inline]
pub fn compute_risk(eta: f64) -> f64 {
    sigmoid(eta)
}

#[inline]
fn scaled_draw(sd: f64, z: f64) -> f64 {
    if sd == 0.0 {
        0.0
    } else {
        sd * z
    }
}

pub fn predictive_terms(features: &[FeatureSpec]) -> Vec<FeatureTerm> {
    let mut out = Vec::new();
    for f in features.iter().filter(|f| f.role == FeatureRole::Predictive) {
        match f.kind {
            FeatureKind::Continuous => out.push(FeatureTerm {
                name: term_name(&f.name, None),
                feature: f.name.clone(),
                level: None,
            }),
            FeatureKind::Categorical => {
                for level in 1..f.n_levels() {
                    out.push(FeatureTerm {
                        name: term_name(&f.name, Some(level)),
                        feature: f.name.clone(),
                        level: Some(level),
                    });
                }
            }
        }
    }
    out
}

/// Number of candidate interaction sets, `sum_{p=2..max_order} C(k, p)`.
pub fn interaction_candidate_count(n_terms: usize, max_order: u32) -> u128 {
    (2..=u64::from(max_order)).fold(0u128, |acc, p| {
        acc.saturating_add(binomial(n_terms as u64, p))
    })
}

/// Select interaction member sets.
///
/// Terms are sorted by name and every subset of size `2..=max_order` is
/// visited in lexicographic order, ascending size. Subsets whose members do
/// not come from distinct features are skipped without consuming a draw;
/// every other candidate consumes exactly one uniform and is kept with
/// probability `probability`.
pub fn enumerate_interactions(
    terms: &[FeatureTerm],
    max_order: u32,
    probability: f64,
    cap: u64,
    stream: &mut RngStream,
) -> Result<Vec<Vec<FeatureTerm>>> {
    if max_order < 2 || terms.len() < 2 {
        return Ok(Vec::new());
    }
    let candidates = interaction_candidate_count(terms.len(), max_order);
    if candidates > u128::from(cap) {
        return Err(Error::InteractionCap {
            candidates,
            cap,
            terms: terms.len(),
            max_order,
        });
    }
    let mut sorted: Vec<&FeatureTerm> = terms.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let k = sorted.len();
    let mut selected = Vec::new();
    for p in 2..=(max_order as usize).min(k) {
        let mut idx: Vec<usize> = (0..p).collect();
        loop {
            let distinct = (0..p).all(|a| {
                (a + 1..p).all(|b| sorted[idx[a]].feature != sorted[idx[b]].feature)
            });
            if distinct && stream.next_open01() < probability {
                selected.push(idx.iter().map(|&i| sorted[i].clone()).collect());
            }
            // next combination in lexicographic order
            let mut i = p;
            while i > 0 && idx[i - 1] == k - p + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..p {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(selected)
}

/// Sample the ground-truth model. Only `model/*` streams are read, so the
/// result does not depend on `n_samples`.
pub fn sample_ground_truth(cfg: &SimulationConfig) -> Result<GroundTruthModel> {
    let seed = cfg.seed();
    let e = &cfg.effects;
    let terms = predictive_terms(&cfg.features);

    let mut main_stream = derive_stream(seed, "model/main");
    let mut main_effects = BTreeMap::new();
    for t in &terms {
        let beta = scaled_draw(e.main_effect_sd, main_stream.next_standard_normal());
        let beta = e.fixed_main_effects.get(&t.name).copied().unwrap_or(beta);
        main_effects.insert(t.name.clone(), beta);
    }

    let mut select = derive_stream(seed, "model/interactions");
    let member_sets = enumerate_interactions(
        &terms,
        e.interaction_max_order,
        e.interaction_probability,
        e.interaction_cap,
        &mut select,
    )?;
    let mut effect_stream = derive_stream(seed, "model/interaction_effects");
    let interactions = member_sets
        .into_iter()
        .map(|members| {
            let order = members.len() as u32;
            let base = scaled_draw(e.interaction_effect_sd, effect_stream.next_standard_normal());
            InteractionTerm {
                members: members.into_iter().map(|t| t.name).collect(),
                order,
                base_effect: base,
                scaled_effect: scale_interaction(base, order, e.scaling_enabled),
            }
        })
        .collect();

    let se = &cfg.site_effects;
    let mut intercept_stream = derive_stream(seed, "model/site_intercepts");
    let mut site_feature_stream = derive_stream(seed, "model/site_features");
    let site_effects = (0..cfg.n_sites())
        .map(|site| {
            let intercept_shift = scaled_draw(se.intercept_sd, intercept_stream.next_standard_normal());
            let mut feature_adjustments = BTreeMap::new();
            for t in &terms {
                let u = site_feature_stream.next_open01();
                let z = site_feature_stream.next_standard_normal();
                if u < se.feature_interaction_probability && se.feature_interaction_sd > 0.0 {
                    feature_adjustments.insert(t.name.clone(), se.feature_interaction_sd * z);
                }
            }
            SiteEffect {
                site,
                intercept_shift,
                feature_adjustments,
            }
        })
        .collect();

    let subgroup_effects = subgroup_effects(&cfg.subgroups, &terms);

    let transforms = e
        .transforms
        .iter()
        .map(|t| (t.feature.clone(), t.transform))
        .collect();

    Ok(GroundTruthModel {
        intercept: e.intercept,
        terms,
        main_effects,
        interactions,
        transforms,
        site_effects,
        subgroup_effects,
        noise_sd: e.noise_sd,
        noise_distribution: e.noise_distribution,
        scaling_enabled: e.scaling_enabled,
        prevalence_targets: cfg.resolve_prevalence(),
    })
}

fn subgroup_effects(subgroups: &[SubgroupSpec], terms: &[FeatureTerm]) -> Vec<SubgroupEffect> {
    let mut out = Vec::new();
    for g in subgroups {
        for (li, level) in g.levels.iter().enumerate() {
            let mut feature_adjustments = BTreeMap::new();
            for m in &g.feature_modifiers {
                let adj = m.adjustments.get(li).copied().unwrap_or(0.0);
                for t in terms.iter().filter(|t| t.feature == m.feature) {
                    *feature_adjustments.entry(t.name.clone()).or_insert(0.0) += adj;
                }
            }
            out.push(SubgroupEffect {
                variable: g.variable.clone(),
                level: level.clone(),
                level_index: li,
                baseline_shift: g.baseline_shift(li),
                feature_adjustments,
            });
        }
    }
    out
}

/// Draw `n` predictor-noise values from the model's noise distribution.
pub fn draw_noise(model: &GroundTruthModel, stream: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| match model.noise_distribution {
            NoiseDistribution::Normal => {
                let z = stream.next_standard_normal();
                scaled_draw(model.noise_sd, z)
            }
            NoiseDistribution::Logistic => {
                let u = stream.next_open01();
                let scale = model.logistic_noise_scale().unwrap_or(0.0);
                if scale == 0.0 {
                    0.0
                } else {
                    scale * libm::log(u / (1.0 - u))
                }
            }
        })
        .collect()
}

/// One patient-timepoint as seen by the risk model.
#[derive(Debug, Clone, Copy)]
pub struct Record<'a> {
    /// One value per column, in column order; categoricals as level indices.
    pub features: &'a [f64],
    pub site: usize,
    /// Level index per subgroup variable, in config order.
    pub demographics: &'a [usize],
}

#[derive(Debug, Clone)]
struct TermRef {
    column: usize,
    level: Option<usize>,
    transform: Option<Transform>,
}

/// Index-based evaluator for a [`GroundTruthModel`] over a fixed column layout.
#[derive(Debug, Clone)]
pub struct LinearPredictor {
    intercept: f64,
    site_intercepts: Vec<f64>,
    terms: Vec<TermRef>,
    /// `[site][term]`: main effect plus site adjustment.
    site_coefficients: Vec<Vec<f64>>,
    /// `[variable][level]`
    baseline_shifts: Vec<Vec<f64>>,
    /// `[variable][level]`: sparse (term, adjustment) pairs.
    subgroup_adjustments: Vec<Vec<Vec<(usize, f64)>>>,
    interactions: Vec<(Vec<usize>, f64)>,
}

impl LinearPredictor {
    pub fn new(
        model: &GroundTruthModel,
        columns: &[ColumnInfo],
        subgroups: &[SubgroupSpec],
    ) -> Result<Self> {
        let mut index = BTreeMap::new();
        let mut terms = Vec::with_capacity(model.terms.len());
        for (ti, t) in model.terms.iter().enumerate() {
            let column = columns
                .iter()
                .position(|c| c.name == t.feature)
                .ok_or_else(|| Error::InvalidParameter(format!("no column for term '{}'", t.name)))?;
            terms.push(TermRef {
                column,
                level: t.level,
                transform: model.transforms.get(&t.feature).copied(),
            });
            index.insert(t.name.as_str(), ti);
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidParameter(format!("unknown term '{name}'")))
        };

        let main: Vec<f64> = model.terms.iter().map(|t| model.main_effect(&t.name)).collect();
        let mut site_coefficients = Vec::with_capacity(model.site_effects.len());
        let mut site_intercepts = Vec::with_capacity(model.site_effects.len());
        for s in &model.site_effects {
            let mut coefs = main.clone();
            for (name, adj) in &s.feature_adjustments {
                coefs[lookup(name)?] += adj;
            }
            site_coefficients.push(coefs);
            site_intercepts.push(s.intercept_shift);
        }

        let mut baseline_shifts = Vec::new();
        let mut subgroup_adjustments = Vec::new();
        for g in subgroups {
            let mut shifts = vec![0.0; g.levels.len()];
            let mut adjs = vec![Vec::new(); g.levels.len()];
            for eff in model.subgroup_effects.iter().filter(|e| e.variable == g.variable) {
                shifts[eff.level_index] = eff.baseline_shift;
                for (name, adj) in &eff.feature_adjustments {
                    adjs[eff.level_index].push((lookup(name)?, *adj));
                }
            }
            baseline_shifts.push(shifts);
            subgroup_adjustments.push(adjs);
        }

        let interactions = model
            .interactions
            .iter()
            .map(|k| {
                let members = k.members.iter().map(|m| lookup(m)).collect::<Result<Vec<_>>>()?;
                Ok((members, k.scaled_effect))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            intercept: model.intercept,
            site_intercepts,
            terms,
            site_coefficients,
            baseline_shifts,
            subgroup_adjustments,
            interactions,
        })
    }

    #[inline]
    fn term_value(&self, term: &TermRef, features: &[f64]) -> f64 {
        let x = features[term.column];
        match (term.level, term.transform) {
            (Some(level), _) => {
                if x as usize == level {
                    1.0
                } else {
                    0.0
                }
            }
            (None, Some(tr)) => apply_transform(x, tr),
            (None, None) => x,
        }
    }

    /// Linear predictor for one record with a given noise draw.
    pub fn eval(&self, record: &Record<'_>, epsilon: f64) -> f64 {
        let mut phi = [0.0f64; 64];
        let mut phi_heap;
        let phi: &mut [f64] = if self.terms.len() <= phi.len() {
            &mut phi[..self.terms.len()]
        } else {
            phi_heap = vec![0.0; self.terms.len()];
            &mut phi_heap
        };
        for (p, t) in phi.iter_mut().zip(&self.terms) {
            *p = self.term_value(t, record.features);
        }

        let mut eta = self.intercept + self.site_intercepts[record.site];
        let coefs = &self.site_coefficients[record.site];
        for (c, p) in coefs.iter().zip(phi.iter()) {
            eta += c * p;
        }
        for (g, &level) in record.demographics.iter().enumerate() {
            eta += self.baseline_shifts[g][level];
            for &(t, adj) in &self.subgroup_adjustments[g][level] {
                eta += adj * phi[t];
            }
        }
        for (members, gamma) in &self.interactions {
            eta += gamma * members.iter().map(|&m| phi[m]).product::<f64>();
        }
        eta + epsilon
    }
}

/// Convenience single-record evaluation; bulk callers should build a
/// [`LinearPredictor`] once.
pub fn compute_linear_predictor(
    record: &Record<'_>,
    model: &GroundTruthModel,
    columns: &[ColumnInfo],
    subgroups: &[SubgroupSpec],
    epsilon: f64,
) -> Result<f64> {
    Ok(LinearPredictor::new(model, columns, subgroups)?.eval(record, epsilon))
}
