//! Labelled, seedable random substreams.
//!
//! Every logical unit of randomness (a model component, a feature column,
//! the label draws, a bootstrap) reads from its own stream derived from the
//! root seed and a path-like label. Streams never share state, so adding
//! patients cannot perturb the sampled model and column generation order is
//! irrelevant to the output.
//!
//! Generator: xoshiro256++ seeded from `xxh3_64(label, seed = root_seed)`.
//! Normal deviates use one uniform and the inverse CDF, so every element
//! consumes exactly one draw.

use alloc::string::String;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::math::normal_quantile;

/// Recorded in metadata so datasets can be traced to the generator.
pub const PRNG_DESCRIPTION: &str = "xoshiro256++ seeded by xxh3-64(label, root_seed); inverse-CDF normals";

const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct RngStream {
    root_seed: u64,
    label: String,
    inner: Xoshiro256PlusPlus,
}

/// Derive the stream for `(root_seed, label)`.
pub fn derive_stream(root_seed: u64, label: &str) -> RngStream {
    debug_assert!(!label.is_empty(), "stream label must be nonempty");
    let mixed = xxhash_rust::xxh3::xxh3_64_with_seed(label.as_bytes(), root_seed);
    RngStream {
        root_seed,
        label: String::from(label),
        inner: Xoshiro256PlusPlus::seed_from_u64(mixed),
    }
}

/// Hash a label into a fresh 64-bit seed (used for per-trial datasets).
pub fn derive_seed(root_seed: u64, label: &str) -> u64 {
    xxhash_rust::xxh3::xxh3_64_with_seed(label.as_bytes(), root_seed ^ 0x5851_f42d_4c95_7f2d)
}

impl RngStream {
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn next_standard_normal(&mut self) -> f64 {
        normal_quantile(self.next_open01())
    }

    /// Uniform index in `0..n`.
    #[inline]
    pub fn next_index(&mut self, n: usize) -> usize {
        let i = (self.next_open01() * n as f64) as usize;
        i.min(n - 1)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_index(i + 1);
            items.swap(i, j);
        }
    }
}

pub fn sample_normal(stream: &mut RngStream, mean: f64, sd: f64, n: usize) -> Result<Vec<f64>> {
    if !(sd >= 0.0) || !sd.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!(
            "normal requires finite mean and sd >= 0 (got mean={mean}, sd={sd})"
        )));
    }
    Ok((0..n)
        .map(|_| {
            let z = stream.next_standard_normal();
            if sd == 0.0 {
                mean
            } else {
                mean + sd * z
            }
        })
        .collect())
}

pub fn sample_uniform(stream: &mut RngStream, low: f64, high: f64, n: usize) -> Result<Vec<f64>> {
    if !(low < high) || !low.is_finite() || !high.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!(
            "uniform requires finite low < high (got {low}, {high})"
        )));
    }
    Ok((0..n)
        .map(|_| low + (high - low) * stream.next_open01())
        .collect())
}

pub(crate) fn check_simplex(probabilities: &[f64]) -> Result<()> {
    if probabilities.is_empty() {
        return Err(Error::InvalidParameter("empty probability vector".into()));
    }
    if probabilities.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::InvalidParameter(alloc::format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Index of the category selected by a uniform `u` in (0, 1).
pub(crate) fn categorical_index(cumulative: &[f64], u: f64) -> usize {
    // The last category absorbs rounding in the cumulative sum.
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

pub(crate) fn cumulative(probabilities: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probabilities
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

pub fn sample_categorical(
    stream: &mut RngStream,
    probabilities: &[f64],
    n: usize,
) -> Result<Vec<usize>> {
    check_simplex(probabilities)?;
    let cum = cumulative(probabilities);
    let last_positive = probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    Ok((0..n)
        .map(|_| categorical_index(&cum, stream.next_open01()).min(last_positive))
        .collect())
}

/// `n` rows of `k` equicorrelated standard normals, row-major.
///
/// Each row is `sqrt(rho) * z + sqrt(1 - rho) * e_j` with a shared factor
/// `z`, drawn in the order `z, e_1, .., e_k`.
pub fn sample_correlated_normals(
    stream: &mut RngStream,
    rho: f64,
    k: usize,
    n: usize,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(alloc::format!(
            "equicorrelation must lie in [0, 1) (got {rho})"
        )));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(
            "correlated normals need at least two columns".into(),
        ));
    }
    let shared = libm::sqrt(rho);
    let own = libm::sqrt(1.0 - rho);
    let mut out = Vec::with_capacity(n * k);
    for _ in 0..n {
        let z = stream.next_standard_normal();
        for _ in 0..k {
            out.push(shared * z + own * stream.next_standard_normal());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (mean(a), mean(b));
        let mut sab = 0.0;
        let mut saa = 0.0;
        let mut sbb = 0.0;
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / libm::sqrt(saa * sbb)
    }

    #[test]
    fn same_seed_and_label_repeat() {
        let mut a = derive_stream(42, "model");
        let mut b = derive_stream(42, "model");
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn labels_and_seeds_separate_streams() {
        let first = |seed, label| {
            let mut s = derive_stream(seed, label);
            (0..16).map(|_| s.next_u64()).collect::<Vec<_>>()
        };
        assert_ne!(first(42, "model"), first(42, "data"));
        assert_ne!(first(42, "x"), first(43, "x"));
    }

    #[test]
    fn zero_sd_returns_mean_exactly() {
        let mut s = derive_stream(1, "n");
        assert_eq!(sample_normal(&mut s, 0.0, 0.0, 5).unwrap(), [0.0; 5]);
        assert_eq!(sample_normal(&mut s, 2.5, 0.0, 2).unwrap(), [2.5; 2]);
        assert!(sample_normal(&mut s, 0.0, -1.0, 2).is_err());
    }

    #[test]
    fn point_mass_categorical() {
        let mut s = derive_stream(1, "c");
        assert!(sample_categorical(&mut s, &[1.0, 0.0], 10)
            .unwrap()
            .iter()
            .all(|&i| i == 0));
        assert!(sample_categorical(&mut s, &[0.5, 0.6], 1).is_err());
        assert!(sample_categorical(&mut s, &[], 1).is_err());
        assert!(sample_categorical(&mut s, &[1.5, -0.5], 1).is_err());
    }

    #[test]
    fn uniform_mean_within_clt_bound() {
        let mut s = derive_stream(7, "u");
        let v = sample_uniform(&mut s, 0.0, 1.0, 100_000).unwrap();
        assert!((mean(&v) - 0.5).abs() < 0.005);
        assert!(v.iter().all(|&x| x > 0.0 && x < 1.0));
        assert!(sample_uniform(&mut s, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn equicorrelation_structure() {
        for &(rho, lo, hi) in &[(0.0, -0.03, 0.03), (0.9, 0.88, 0.92)] {
            let mut s = derive_stream(11, "corr");
            let k = 3;
            let n = 10_000;
            let m = sample_correlated_normals(&mut s, rho, k, n).unwrap();
            let col = |j: usize| (0..n).map(|i| m[i * k + j]).collect::<Vec<_>>();
            let cols: Vec<_> = (0..k).map(col).collect();
            for a in 0..k {
                let mu = mean(&cols[a]);
                let var = cols[a].iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n as f64;
                assert!((var - 1.0).abs() < 0.05, "var {var}");
                for b in (a + 1)..k {
                    let r = corr(&cols[a], &cols[b]);
                    assert!(r > lo && r < hi, "rho={rho} r={r}");
                }
            }
        }
        let mut s = derive_stream(11, "corr");
        assert!(sample_correlated_normals(&mut s, 1.0, 2, 1).is_err());
        assert!(sample_correlated_normals(&mut s, 0.5, 1, 1).is_err());
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut s = derive_stream(3, "shuffle");
        let mut v: Vec<usize> = (0..100).collect();
        s.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
