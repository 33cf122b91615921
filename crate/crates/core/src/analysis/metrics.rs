//! Ranking and resampling statistics.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Area under the ROC curve via the Mann-Whitney statistic with midranks.
///
/// Equals `P(score_pos > score_neg) + 0.5 * P(score_pos == score_neg)`.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidParameter("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y != 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j share their mean
        let midrank = (i + 1 + j) as f64 / 2.0;
        let pos_in_tie = order[i..j].iter().filter(|&&k| labels[k] != 0).count();
        pos_rank_sum += midrank * pos_in_tie as f64;
        i = j;
    }
    let n_pos = n_pos as f64;
    let u = pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0;
    Ok(u / (n_pos * n_neg as f64))
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval for the mean of binary values.
///
/// Each of the `resamples` replicates draws `values.len()` indices with
/// replacement from `stream`. The interval is widened if needed so it always
/// contains the sample mean.
pub fn bootstrap_ci(
    values: &[u8],
    resamples: usize,
    level: f64,
    stream: &mut RngStream,
) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("bootstrap needs a nonempty sample".into()));
    }
    if resamples < 100 {
        return Err(Error::InvalidParameter("bootstrap needs at least 100 resamples".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter("confidence level must lie in (0,1)".into()));
    }
    let n = values.len();
    let mut means = vec![0.0; resamples];
    for m in &mut means {
        let mut hits = 0usize;
        for _ in 0..n {
            hits += usize::from(values[stream.next_index(n)] != 0);
        }
        *m = hits as f64 / n as f64;
    }
    means.sort_unstable_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let observed = values.iter().filter(|&&v| v != 0).count() as f64 / n as f64;
    let low = quantile_sorted(&means, alpha).min(observed);
    let high = quantile_sorted(&means, 1.0 - alpha).max(observed);
    Ok((low, high))
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    libm::sqrt(ss / (values.len() - 1) as f64)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Mean log-loss of probabilities against labels.
pub fn log_loss(probabilities: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(1e-15, 1.0 - 1e-15);
            if y != 0 {
                -libm::log(p)
            } else {
                -libm::log(1.0 - p)
            }
        })
        .sum();
    total / labels.len() as f64
}
