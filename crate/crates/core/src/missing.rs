//! Missing-completely-at-random masking.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::config::MissingSpec;
use crate::features::FeatureMatrix;
use crate::rng::derive_stream;

/// `true` marks a missing cell; aligned with [`FeatureMatrix::values`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    pub cells: Vec<bool>,
}

impl MissingMask {
    pub fn none(len: usize) -> Self {
        Self {
            cells: vec![false; len],
        }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&m| m).count()
    }
}

/// Mask each cell of feature `f` at site `s` independently with probability
/// `clamp(rate_f * multiplier_s, 0, 1)`.
///
/// One uniform is drawn per cell from the feature's own substream, whether or
/// not the feature has a configured rate. Values stay in the matrix; only the
/// mask changes.
pub fn inject_missing(matrix: &FeatureMatrix, spec: &MissingSpec, root_seed: u64) -> MissingMask {
    let mut mask = MissingMask::none(matrix.values.len());
    let multipliers: Vec<f64> = {
        let n_sites = matrix.sites.iter().copied().max().map_or(0, |m| m + 1);
        (0..n_sites).map(|s| spec.site_multiplier(s)).collect()
    };
    for (j, col) in matrix.columns.iter().enumerate() {
        let rate = spec.per_feature_rates.get(&col.name).copied().unwrap_or(0.0);
        let mut stream = derive_stream(root_seed, &format!("data/missing/{}", col.name));
        for i in 0..matrix.n_rows {
            let p = (rate * multipliers[matrix.sites[i]]).clamp(0.0, 1.0);
            for t in 0..matrix.n_timepoints {
                if stream.next_open01() < p {
                    mask.cells[matrix.index(i, t, j)] = true;
                }
            }
        }
    }
    mask
}

/// Masked fraction per column, over all rows and timepoints.
pub fn missing_rates(matrix: &FeatureMatrix, mask: &MissingMask) -> Vec<f64> {
    let cells = (matrix.n_rows * matrix.n_timepoints).max(1) as f64;
    (0..matrix.n_columns())
        .map(|j| {
            let mut count = 0usize;
            for i in 0..matrix.n_rows {
                for t in 0..matrix.n_timepoints {
                    count += usize::from(mask.cells[matrix.index(i, t, j)]);
                }
            }
            count as f64 / cells
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Distribution, FeatureKind, FeatureRole, FeatureSpec};
    use crate::features::{generate_cross_sectional, GeneratorRegistry};
    use alloc::string::String;

    fn matrix(n: usize, names: &[&str], n_sites: usize) -> FeatureMatrix {
        let feats: Vec<FeatureSpec> = names
            .iter()
            .map(|n| FeatureSpec {
                name: String::from(*n),
                kind: FeatureKind::Continuous,
                role: FeatureRole::Predictive,
                distribution: Distribution::Normal { mean: 0.0, sd: 1.0 },
                noise_correlation_group: None,
                noise_correlation: None,
            })
            .collect();
        let mut m = generate_cross_sectional(&feats, n, 1, &GeneratorRegistry::new()).unwrap();
        m.sites = (0..n).map(|i| i % n_sites).collect();
        m
    }

    #[test]
    fn zero_and_full_rates() {
        let m = matrix(500, &["a", "b"], 1);
        let mut spec = MissingSpec::default();
        assert_eq!(inject_missing(&m, &spec, 3).count(), 0);
        spec.per_feature_rates.insert("a".into(), 0.0);
        spec.per_feature_rates.insert("b".into(), 1.0);
        let mask = inject_missing(&m, &spec, 3);
        assert_eq!(missing_rates(&m, &mask), vec![0.0, 1.0]);
    }

    #[test]
    fn rate_within_binomial_bound_and_masks_independent() {
        let m = matrix(10_000, &["a", "b"], 1);
        let mut spec = MissingSpec::default();
        spec.per_feature_rates.insert("a".into(), 0.3);
        spec.per_feature_rates.insert("b".into(), 0.3);
        let mask = inject_missing(&m, &spec, 8);
        let rates = missing_rates(&m, &mask);
        assert!((rates[0] - 0.3).abs() <= 0.014, "{rates:?}");
        let a: Vec<f64> = (0..10_000).map(|i| f64::from(u8::from(mask.cells[i * 2]))).collect();
        let b: Vec<f64> = (0..10_000).map(|i| f64::from(u8::from(mask.cells[i * 2 + 1]))).collect();
        let (ma, mb) = (a.iter().sum::<f64>() / 1e4, b.iter().sum::<f64>() / 1e4);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / 1e4;
        let r = cov / libm::sqrt(ma * (1.0 - ma) * mb * (1.0 - mb));
        assert!(r.abs() < 0.03, "{r}");
    }

    #[test]
    fn site_multipliers_clamp() {
        let m = matrix(4000, &["a"], 2);
        let mut spec = MissingSpec::default();
        spec.per_feature_rates.insert("a".into(), 0.6);
        spec.per_site_multipliers.insert("0".into(), 0.0);
        spec.per_site_multipliers.insert("1".into(), 5.0);
        let mask = inject_missing(&m, &spec, 2);
        for i in 0..4000 {
            assert_eq!(mask.cells[i], m.sites[i] == 1);
        }
    }
}
