//! Binary outcomes from linear predictors, with per-site thresholds solved so
//! that the expected prevalence at each site hits its target.
//!
//! A record's label probability is `sigmoid((eta - t_s) / tau)`. The
//! threshold `t_s` is solved after the band is included, so targets hold in
//! expectation. At `tau = 0` labels are the indicator `eta > t_s`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeCalibration {
    /// `None` for sites without records.
    pub thresholds: Vec<Option<f64>>,
    pub temperature: f64,
    pub targets: Vec<f64>,
    pub achieved_expected_prevalence: Vec<Option<f64>>,
    pub iterations_used: Vec<u32>,
}

impl OutcomeCalibration {
    /// `|achieved - target|` per site.
    pub fn residuals(&self) -> Vec<Option<f64>> {
        self.achieved_expected_prevalence
            .iter()
            .zip(&self.targets)
            .map(|(a, t)| a.map(|a| (a - t).abs()))
            .collect()
    }
}

#[inline]
pub fn label_probability(eta: f64, threshold: f64, temperature: f64) -> f64 {
    if temperature > 0.0 {
        sigmoid((eta - threshold) / temperature)
    } else if eta > threshold {
        1.0
    } else {
        0.0
    }
}

fn mean_label_probability(etas: &[f64], threshold: f64, temperature: f64) -> f64 {
    etas.iter()
        .map(|&e| label_probability(e, threshold, temperature))
        .sum::<f64>()
        / etas.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSolution {
    pub threshold: f64,
    pub achieved: f64,
    pub iterations: u32,
}

/// Solve for the site threshold.
///
/// For `temperature > 0` this bisects on the bracket
/// `[min eta - 10 tau - 1, max eta + 10 tau + 1]` until the mean label
/// probability is within `tolerance` of `target`. At `temperature == 0` the
/// threshold is the lower empirical quantile giving the attainable
/// prevalence `k/n` nearest the target.
pub fn calibrate_threshold(
    etas: &[f64],
    target: f64,
    temperature: f64,
    tolerance: f64,
    max_iterations: u32,
) -> Result<ThresholdSolution> {
    if etas.is_empty() {
        return Err(Error::InvalidParameter("cannot calibrate an empty site".into()));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "prevalence target must lie in (0,1), got {target}"
        )));
    }
    if temperature == 0.0 {
        return Ok(quantile_threshold(etas, target));
    }

    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &e in etas {
        min = min.min(e);
        max = max.max(e);
    }
    let mut low = min - 10.0 * temperature - 1.0;
    let mut high = max + 10.0 * temperature + 1.0;
    let mut mid = 0.5 * (low + high);
    let mut achieved = mean_label_probability(etas, mid, temperature);
    for iteration in 1..=max_iterations {
        mid = 0.5 * (low + high);
        achieved = mean_label_probability(etas, mid, temperature);
        if (achieved - target).abs() <= tolerance {
            return Ok(ThresholdSolution {
                threshold: mid,
                achieved,
                iterations: iteration,
            });
        }
        // mean probability decreases in the threshold
        if achieved > target {
            low = mid;
        } else {
            high = mid;
        }
    }
    Err(Error::CalibrationFailed {
        iterations: max_iterations,
        low,
        high,
        residual: (achieved - target).abs(),
    })
}

fn quantile_threshold(etas: &[f64], target: f64) -> ThresholdSolution {
    let mut sorted = etas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let wanted = target * n as f64;
    // Below the minimum every record is positive.
    let mut best = (sorted[0] - 1.0, n);
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == v {
            j += 1;
        }
        // threshold v: records strictly above v are positive
        let positives = n - j;
        let better = (positives as f64 - wanted).abs() < (best.1 as f64 - wanted).abs();
        if better {
            best = (v, positives);
        }
        i = j;
    }
    ThresholdSolution {
        threshold: best.0,
        achieved: best.1 as f64 / n as f64,
        iterations: 0,
    }
}

/// Calibrate every site. Sites without records get no threshold.
pub fn calibrate_sites(
    etas: &[f64],
    sites: &[usize],
    targets: &[f64],
    temperature: f64,
    tolerance: f64,
    max_iterations: u32,
) -> Result<OutcomeCalibration> {
    let n_sites = targets.len();
    let mut by_site = vec![Vec::new(); n_sites];
    for (&eta, &s) in etas.iter().zip(sites) {
        by_site[s].push(eta);
    }
    let mut cal = OutcomeCalibration {
        thresholds: vec![None; n_sites],
        temperature,
        targets: targets.to_vec(),
        achieved_expected_prevalence: vec![None; n_sites],
        iterations_used: vec![0; n_sites],
    };
    for (s, site_etas) in by_site.iter().enumerate() {
        if site_etas.is_empty() {
            continue;
        }
        let sol = calibrate_threshold(site_etas, targets[s], temperature, tolerance, max_iterations)?;
        cal.thresholds[s] = Some(sol.threshold);
        cal.achieved_expected_prevalence[s] = Some(sol.achieved);
        cal.iterations_used[s] = sol.iterations;
    }
    Ok(cal)
}

/// Draw `label_i ~ Bernoulli(label_probability(eta_i, t_site(i), tau))`, one
/// uniform per record in record order.
pub fn assign_outcomes(
    etas: &[f64],
    sites: &[usize],
    calibration: &OutcomeCalibration,
    stream: &mut RngStream,
) -> Result<Vec<u8>> {
    etas.iter()
        .zip(sites)
        .map(|(&eta, &s)| {
            let t = calibration.thresholds[s].ok_or(Error::EmptySite(s))?;
            let p = label_probability(eta, t, calibration.temperature);
            Ok(u8::from(stream.next_open01() < p))
        })
        .collect()
}
