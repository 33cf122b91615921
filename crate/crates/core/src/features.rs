//! Patient-level sampling: site assignment, demographics and feature values.
//!
//! Continuous columns are generated on a latent standard-normal scale and
//! mapped through the configured marginal's quantile function. Temporal
//! dynamics act on that latent scale (a Gaussian copula in time), so every
//! timepoint keeps the configured marginal.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::{Distribution, FeatureKind, FeatureRole, FeatureSpec, SubgroupSpec, TemporalSpec};
use crate::error::{Error, Result};
use crate::math::{normal_cdf, normal_quantile};
use crate::rng::{derive_stream, sample_categorical, sample_correlated_normals, RngStream};

/// A continuous marginal usable as a feature generator.
pub trait Marginal: Send + Sync {
    fn quantile(&self, u: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
}

/// Named custom column generators, referenced from configs as
/// `distribution = { custom = { generator = "<name>" } }`.
#[derive(Default)]
pub struct GeneratorRegistry {
    generators: BTreeMap<String, Box<dyn Marginal>>,
}

impl GeneratorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: impl Into<String>, generator: Box<dyn Marginal>) {
        self.generators.insert(name.into(), generator);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Marginal> {
        self.generators.get(name).map(|g| g.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnInfo {
    pub name: String,
    pub kind: FeatureKind,
    pub role: FeatureRole,
    /// Number of levels for categorical columns, 0 otherwise.
    pub n_levels: usize,
}

impl ColumnInfo {
    pub fn from_spec(spec: &FeatureSpec) -> Self {
        Self {
            name: spec.name.clone(),
            kind: spec.kind,
            role: spec.role,
            n_levels: spec.n_levels(),
        }
    }
}

/// Complete (pre-missingness) feature values, `n_rows x n_timepoints x n_columns`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<ColumnInfo>,
    pub n_rows: usize,
    pub n_timepoints: usize,
    /// Indexed `[(row * n_timepoints + t) * n_columns + col]`; categoricals hold level indices.
    pub values: Vec<f64>,
    pub sites: Vec<usize>,
    /// Indexed `[row * n_demographics + variable]`.
    pub demographics: Vec<usize>,
    pub n_demographics: usize,
}

impl FeatureMatrix {
    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn index(&self, row: usize, t: usize, col: usize) -> usize {
        (row * self.n_timepoints + t) * self.columns.len() + col
    }

    #[inline]
    pub fn value(&self, row: usize, t: usize, col: usize) -> f64 {
        self.values[self.index(row, t, col)]
    }

    /// All column values for one patient-timepoint.
    pub fn record(&self, row: usize, t: usize) -> &[f64] {
        let f = self.columns.len();
        let start = (row * self.n_timepoints + t) * f;
        &self.values[start..start + f]
    }

    pub fn demographic_levels(&self, row: usize) -> &[usize] {
        let g = self.n_demographics;
        &self.demographics[row * g..row * g + g]
    }

    /// Column values at one timepoint, in row order.
    pub fn column(&self, t: usize, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.value(i, t, col)).collect()
    }
}

/// Assign each patient to a site independently.
///
/// Returns the assignment plus warnings for positive-weight sites that
/// received no patients.
pub fn assign_sites(
    n_samples: usize,
    n_sites: usize,
    site_proportions: Option<&[f64]>,
    stream: &mut RngStream,
) -> Result<(Vec<usize>, Vec<String>)> {
    let weights: Vec<f64> = match site_proportions {
        Some(p) => p.to_vec(),
        None => vec![1.0; n_sites],
    };
    if weights.len() != n_sites || n_sites == 0 {
        return Err(Error::InvalidParameter(format!(
            "expected {n_sites} site weights, got {}",
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(
            "site proportions must not all be zero".into(),
        ));
    }
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let sites = sample_categorical(stream, &probs, n_samples)?;
    let mut counts = vec![0usize; n_sites];
    for &s in &sites {
        counts[s] += 1;
    }
    let warnings = counts
        .iter()
        .enumerate()
        .filter(|(s, c)| **c == 0 && weights[*s] > 0.0)
        .map(|(s, _)| format!("site {s} has positive weight but received no patients"))
        .collect();
    Ok((sites, warnings))
}

/// Level index per patient and subgroup variable, row-major.
pub fn generate_demographics(
    subgroups: &[SubgroupSpec],
    n_samples: usize,
    root_seed: u64,
) -> Result<Vec<usize>> {
    let g = subgroups.len();
    let mut out = vec![0usize; n_samples * g];
    for (j, spec) in subgroups.iter().enumerate() {
        let mut stream = derive_stream(root_seed, &format!("data/demographics/{}", spec.variable));
        let levels = sample_categorical(&mut stream, &spec.probabilities, n_samples)?;
        for (i, level) in levels.into_iter().enumerate() {
            out[i * g + j] = level;
        }
    }
    Ok(out)
}

enum ContinuousMap<'a> {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Custom(&'a dyn Marginal),
}

impl<'a> ContinuousMap<'a> {
    fn new(spec: &FeatureSpec, registry: &'a GeneratorRegistry) -> Result<Self> {
        match &spec.distribution {
            Distribution::Normal { mean, sd } => Ok(Self::Normal { mean: *mean, sd: *sd }),
            Distribution::Uniform { low, high } => Ok(Self::Uniform { low: *low, high: *high }),
            Distribution::Custom { generator } => registry
                .get(generator)
                .map(Self::Custom)
                .ok_or_else(|| Error::UnknownGenerator(generator.clone())),
            Distribution::Categorical { .. } => Err(Error::InvalidParameter(format!(
                "feature '{}' is not continuous",
                spec.name
            ))),
        }
    }

    fn from_latent(&self, z: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => mean + sd * z,
            Self::Uniform { low, high } => low + (high - low) * normal_cdf(z),
            Self::Custom(g) => g.quantile(normal_cdf(z)),
        }
    }

    fn to_latent(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, sd } => (x - mean) / sd,
            Self::Uniform { low, high } => normal_quantile((x - low) / (high - low)),
            Self::Custom(g) => normal_quantile(g.cdf(x)),
        }
    }
}

/// Noise-correlation groups in first-appearance order: (label, rho, member columns).
fn noise_groups(features: &[FeatureSpec]) -> Vec<(String, f64, Vec<usize>)> {
    let mut groups: Vec<(String, f64, Vec<usize>)> = Vec::new();
    for (j, f) in features.iter().enumerate() {
        if let Some(label) = &f.noise_correlation_group {
            match groups.iter_mut().find(|g| &g.0 == label) {
                Some(g) => g.2.push(j),
                None => groups.push((label.clone(), f.noise_correlation.unwrap_or(0.0), vec![j])),
            }
        }
    }
    groups
}

/// Latent normals for `members`, equicorrelated when the group has 2+ members.
fn group_latents(
    stream: &mut RngStream,
    rho: f64,
    k: usize,
    n: usize,
) -> Result<Vec<f64>> {
    if k >= 2 {
        sample_correlated_normals(stream, rho, k, n)
    } else {
        Ok((0..n).map(|_| stream.next_standard_normal()).collect())
    }
}

/// Sample one timepoint of every configured feature.
///
/// Each column (or noise-correlation group) reads its own substream, so the
/// result does not depend on generation order.
pub fn generate_cross_sectional(
    features: &[FeatureSpec],
    n_samples: usize,
    root_seed: u64,
    registry: &GeneratorRegistry,
) -> Result<FeatureMatrix> {
    let f = features.len();
    let mut values = vec![0.0; n_samples * f];

    for (j, spec) in features.iter().enumerate() {
        if spec.noise_correlation_group.is_some() {
            continue;
        }
        let mut stream = derive_stream(root_seed, &format!("data/features/{}", spec.name));
        match &spec.distribution {
            Distribution::Categorical { probabilities } => {
                let levels = sample_categorical(&mut stream, probabilities, n_samples)?;
                for (i, level) in levels.into_iter().enumerate() {
                    values[i * f + j] = level as f64;
                }
            }
            _ => {
                let map = ContinuousMap::new(spec, registry)?;
                for i in 0..n_samples {
                    values[i * f + j] = map.from_latent(stream.next_standard_normal());
                }
            }
        }
    }

    for (label, rho, members) in noise_groups(features) {
        let mut stream = derive_stream(root_seed, &format!("data/noise_groups/{label}"));
        let k = members.len();
        let latent = group_latents(&mut stream, rho, k, n_samples)?;
        let maps = members
            .iter()
            .map(|&j| ContinuousMap::new(&features[j], registry))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..n_samples {
            for (m, &j) in members.iter().enumerate() {
                values[i * f + j] = maps[m].from_latent(latent[i * k + m]);
            }
        }
    }

    Ok(FeatureMatrix {
        columns: features.iter().map(ColumnInfo::from_spec).collect(),
        n_rows: n_samples,
        n_timepoints: 1,
        values,
        sites: Vec::new(),
        demographics: Vec::new(),
        n_demographics: 0,
    })
}

/// Grow a cross-sectional matrix into `n_timepoints` timepoints.
///
/// Continuous latents follow a stationary AR(1), `z_t = rho z_{t-1} +
/// sqrt(1 - rho^2) e_t`; noise-group innovations stay equicorrelated.
/// Categorical levels stay put with probability `s` and otherwise move to one
/// of the other levels uniformly.
pub fn extend_temporal(
    matrix: &FeatureMatrix,
    features: &[FeatureSpec],
    temporal: &TemporalSpec,
    root_seed: u64,
    registry: &GeneratorRegistry,
) -> Result<FeatureMatrix> {
    if matrix.n_timepoints != 1 {
        return Err(Error::InvalidParameter(
            "temporal extension expects a cross-sectional matrix".into(),
        ));
    }
    let n = matrix.n_rows;
    let f = matrix.n_columns();
    let big_t = temporal.n_timepoints.max(1);
    let rho = temporal.continuous_ar_coefficient;
    let innovation_scale = libm::sqrt((1.0 - rho * rho).max(0.0));
    let stay = temporal.categorical_stay_probability;

    let mut values = vec![0.0; n * big_t * f];
    let at = |i: usize, t: usize, j: usize| (i * big_t + t) * f + j;
    for i in 0..n {
        values[at(i, 0, 0)..at(i, 0, 0) + f].copy_from_slice(matrix.record(i, 0));
    }

    // Independent columns.
    for (j, spec) in features.iter().enumerate() {
        if spec.noise_correlation_group.is_some() {
            continue;
        }
        let mut stream = derive_stream(root_seed, &format!("data/temporal/{}", spec.name));
        if let Distribution::Categorical { probabilities } = &spec.distribution {
            let c = probabilities.len();
            for t in 1..big_t {
                for i in 0..n {
                    let prev = values[at(i, t - 1, j)] as usize;
                    let u = stream.next_open01();
                    let next = if u < stay || c < 2 {
                        prev
                    } else {
                        let v = (u - stay) / (1.0 - stay);
                        let k = ((v * (c - 1) as f64) as usize).min(c - 2);
                        if k >= prev {
                            k + 1
                        } else {
                            k
                        }
                    };
                    values[at(i, t, j)] = next as f64;
                }
            }
        } else {
            let map = ContinuousMap::new(spec, registry)?;
            for i in 0..n {
                let mut z = map.to_latent(values[at(i, 0, j)]);
                for t in 1..big_t {
                    let e = stream.next_standard_normal();
                    if rho == 1.0 {
                        values[at(i, t, j)] = values[at(i, t - 1, j)];
                    } else {
                        z = rho * z + innovation_scale * e;
                        values[at(i, t, j)] = map.from_latent(z);
                    }
                }
            }
        }
    }

    // Noise groups share equicorrelated innovations.
    for (label, group_rho, members) in noise_groups(features) {
        let mut stream = derive_stream(root_seed, &format!("data/temporal_groups/{label}"));
        let k = members.len();
        let maps = members
            .iter()
            .map(|&j| ContinuousMap::new(&features[j], registry))
            .collect::<Result<Vec<_>>>()?;
        let mut latent = Vec::with_capacity(n * k);
        for i in 0..n {
            for (m, &j) in members.iter().enumerate() {
                latent.push(maps[m].to_latent(values[at(i, 0, j)]));
            }
        }
        for t in 1..big_t {
            let innovations = group_latents(&mut stream, group_rho, k, n)?;
            for i in 0..n {
                for (m, &j) in members.iter().enumerate() {
                    if rho == 1.0 {
                        values[at(i, t, j)] = values[at(i, t - 1, j)];
                    } else {
                        let z = &mut latent[i * k + m];
                        *z = rho * *z + innovation_scale * innovations[i * k + m];
                        values[at(i, t, j)] = maps[m].from_latent(*z);
                    }
                }
            }
        }
    }

    Ok(FeatureMatrix {
        columns: matrix.columns.clone(),
        n_rows: n,
        n_timepoints: big_t,
        values,
        sites: matrix.sites.clone(),
        demographics: matrix.demographics.clone(),
        n_demographics: matrix.n_demographics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{FeatureModifier, OutcomeTimepoint};

    fn normal(name: &str, mean: f64, sd: f64) -> FeatureSpec {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Continuous,
            role: FeatureRole::Predictive,
            distribution: Distribution::Normal { mean, sd },
            noise_correlation_group: None,
            noise_correlation: None,
        }
    }

    fn categorical(name: &str, p: &[f64]) -> FeatureSpec {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Categorical,
            role: FeatureRole::Predictive,
            distribution: Distribution::Categorical {
                probabilities: p.to_vec(),
            },
            noise_correlation_group: None,
            noise_correlation: None,
        }
    }

    fn mean_sd(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, libm::sqrt(var))
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let (ma, sa) = mean_sd(a);
        let (mb, sb) = mean_sd(b);
        let n = a.len() as f64;
        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / ((n - 1.0) * sa * sb)
    }

    fn temporal(t: usize, rho: f64, s: f64) -> TemporalSpec {
        TemporalSpec {
            n_timepoints: t,
            continuous_ar_coefficient: rho,
            categorical_stay_probability: s,
            outcome_timepoint: OutcomeTimepoint::Last,
        }
    }

    #[test]
    fn site_assignment_edge_cases() {
        let mut s = derive_stream(1, "data/sites");
        let (sites, warn) = assign_sites(500, 3, Some(&[1.0, 0.0, 0.0]), &mut s).unwrap();
        assert!(sites.iter().all(|&x| x == 0));
        assert!(warn.is_empty());
        let (sites, _) = assign_sites(50, 1, None, &mut s).unwrap();
        assert!(sites.iter().all(|&x| x == 0));
        assert!(assign_sites(5, 2, Some(&[0.0, 0.0]), &mut s).is_err());
        let (_, warn) = assign_sites(1, 4, None, &mut s).unwrap();
        assert_eq!(warn.len(), 3);
    }

    #[test]
    fn uniform_site_counts_within_binomial_bound() {
        let mut s = derive_stream(1, "data/sites");
        let (sites, _) = assign_sites(10_000, 4, None, &mut s).unwrap();
        for site in 0..4 {
            let c = sites.iter().filter(|&&x| x == site).count() as f64;
            assert!((c - 2500.0).abs() <= 130.0, "site {site}: {c}");
        }
    }

    #[test]
    fn demographics_frequencies_and_independence() {
        let groups = vec![
            SubgroupSpec {
                variable: "sex".into(),
                levels: vec!["F".into(), "M".into()],
                probabilities: vec![0.5, 0.5],
                baseline_shifts: vec![],
                feature_modifiers: vec![],
            },
            SubgroupSpec {
                variable: "band".into(),
                levels: vec!["young".into(), "old".into()],
                probabilities: vec![0.3, 0.7],
                baseline_shifts: vec![],
                feature_modifiers: Vec::<FeatureModifier>::new(),
            },
            SubgroupSpec {
                variable: "all".into(),
                levels: vec!["only".into()],
                probabilities: vec![1.0],
                baseline_shifts: vec![],
                feature_modifiers: vec![],
            },
        ];
        let d = generate_demographics(&groups, 10_000, 9).unwrap();
        let col = |g: usize| (0..10_000).map(|i| d[i * 3 + g] as f64).collect::<Vec<_>>();
        let females = col(0).iter().filter(|&&x| x == 0.0).count() as f64;
        assert!((females - 5000.0).abs() <= 150.0);
        assert!(corr(&col(0), &col(1)).abs() < 0.03);
        assert!(col(2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cross_sectional_marginals() {
        let feats = vec![
            normal("x", 0.0, 1.0),
            categorical("c", &[0.7, 0.2, 0.1]),
        ];
        let m = generate_cross_sectional(&feats, 10_000, 4, &GeneratorRegistry::new()).unwrap();
        let (mean, sd) = mean_sd(&m.column(0, 0));
        assert!(mean.abs() < 0.03 && (sd - 1.0).abs() < 0.03, "{mean} {sd}");
        let c = m.column(0, 1);
        let share = c.iter().filter(|&&x| x == 0.0).count() as f64 / 10_000.0;
        assert!((share - 0.7).abs() < 0.014);
        assert!(c.iter().all(|&x| x == 0.0 || x == 1.0 || x == 2.0));
    }

    #[test]
    fn zero_features_gives_empty_columns() {
        let m = generate_cross_sectional(&[], 7, 1, &GeneratorRegistry::new()).unwrap();
        assert_eq!(m.n_rows, 7);
        assert_eq!(m.n_columns(), 0);
        assert!(m.values.is_empty());
    }

    #[test]
    fn column_generation_is_order_independent() {
        let a = normal("a", 0.0, 1.0);
        let b = categorical("b", &[0.5, 0.5]);
        let reg = GeneratorRegistry::new();
        let ab = generate_cross_sectional(&[a.clone(), b.clone()], 100, 3, &reg).unwrap();
        let ba = generate_cross_sectional(&[b, a], 100, 3, &reg).unwrap();
        assert_eq!(ab.column(0, 0), ba.column(0, 1));
        assert_eq!(ab.column(0, 1), ba.column(0, 0));
    }

    #[test]
    fn noise_group_equicorrelation() {
        let mut feats = Vec::new();
        for name in ["n1", "n2", "n3"] {
            let mut f = normal(name, 1.0, 2.0);
            f.role = FeatureRole::Noise;
            f.noise_correlation_group = Some("g".into());
            f.noise_correlation = Some(0.6);
            feats.push(f);
        }
        let m = generate_cross_sectional(&feats, 10_000, 8, &GeneratorRegistry::new()).unwrap();
        let r = corr(&m.column(0, 0), &m.column(0, 2));
        assert!((r - 0.6).abs() < 0.03, "{r}");
        let (mean, sd) = mean_sd(&m.column(0, 1));
        assert!((mean - 1.0).abs() < 0.06 && (sd - 2.0).abs() < 0.06);
    }

    #[test]
    fn custom_generator_registry() {
        struct Exponential;
        impl Marginal for Exponential {
            fn quantile(&self, u: f64) -> f64 {
                -libm::log(1.0 - u)
            }
            fn cdf(&self, x: f64) -> f64 {
                1.0 - libm::exp(-x)
            }
        }
        let mut reg = GeneratorRegistry::new();
        reg.register("exp", Box::new(Exponential));
        let mut spec = normal("e", 0.0, 1.0);
        spec.distribution = Distribution::Custom {
            generator: "exp".into(),
        };
        let m = generate_cross_sectional(&[spec.clone()], 20_000, 5, &reg).unwrap();
        let (mean, _) = mean_sd(&m.column(0, 0));
        assert!((mean - 1.0).abs() < 0.03);
        let ext = extend_temporal(&m, &[spec.clone()], &temporal(3, 0.5, 1.0), 5, &reg).unwrap();
        let (mean2, _) = mean_sd(&ext.column(2, 0));
        assert!((mean2 - 1.0).abs() < 0.04);
        assert!(matches!(
            generate_cross_sectional(&[spec], 2, 5, &GeneratorRegistry::new()),
            Err(Error::UnknownGenerator(_))
        ));
    }

    #[test]
    fn frozen_dynamics_copy_first_timepoint() {
        let feats = vec![
            normal("x", 2.0, 3.0),
            categorical("c", &[0.2, 0.3, 0.5]),
        ];
        let reg = GeneratorRegistry::new();
        let m = generate_cross_sectional(&feats, 200, 1, &reg).unwrap();
        let ext = extend_temporal(&m, &feats, &temporal(4, 1.0, 1.0), 1, &reg).unwrap();
        for t in 0..4 {
            for i in 0..200 {
                assert_eq!(ext.record(i, t), m.record(i, 0));
            }
        }
    }

    #[test]
    fn ar_dynamics_autocorrelation_and_stationarity() {
        let feats = vec![
            normal("x", 5.0, 2.0),
            FeatureSpec {
                distribution: Distribution::Uniform { low: 0.0, high: 1.0 },
                ..normal("u", 0.0, 1.0)
            },
        ];
        let reg = GeneratorRegistry::new();
        let m = generate_cross_sectional(&feats, 10_000, 21, &reg).unwrap();

        let ext = extend_temporal(&m, &feats, &temporal(5, 0.8, 0.5), 21, &reg).unwrap();
        for t in 0..5 {
            let (mean, sd) = mean_sd(&ext.column(t, 0));
            assert!((mean - 5.0).abs() < 0.06, "t={t} mean={mean}");
            assert!((sd * sd / 4.0 - 1.0).abs() < 0.05, "t={t} sd={sd}");
            let (umean, usd) = mean_sd(&ext.column(t, 1));
            assert!((umean - 0.5).abs() < 0.01);
            assert!((usd * usd * 12.0 - 1.0).abs() < 0.05);
            if t > 0 {
                let r = corr(&ext.column(t - 1, 0), &ext.column(t, 0));
                assert!((r - 0.8).abs() < 0.02, "lag-1 r={r}");
            }
        }

        let ext0 = extend_temporal(&m, &feats, &temporal(2, 0.0, 0.5), 21, &reg).unwrap();
        let r0 = corr(&ext0.column(0, 0), &ext0.column(1, 0));
        assert!(r0.abs() < 0.03);
    }

    #[test]
    fn markov_chain_stay_probability() {
        let feats = vec![categorical("c", &[0.25, 0.25, 0.25, 0.25])];
        let reg = GeneratorRegistry::new();
        let m = generate_cross_sectional(&feats, 10_000, 2, &reg).unwrap();
        let ext = extend_temporal(&m, &feats, &temporal(2, 0.5, 0.7), 2, &reg).unwrap();
        let stays = (0..10_000)
            .filter(|&i| ext.value(i, 0, 0) == ext.value(i, 1, 0))
            .count() as f64
            / 10_000.0;
        assert!((stays - 0.7).abs() < 0.014, "{stays}");
        assert!((0..10_000).all(|i| (0.0..4.0).contains(&ext.value(i, 1, 0))));
    }
}
