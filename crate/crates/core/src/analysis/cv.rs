//! Learners and stratified k-fold cross-validation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::design::Design;
use super::gbt::{fit_gbt, predict_gbt, GbtModel, GbtParams};
use super::logistic::{fit_logistic_irls, FittedLinearModel};
use super::metrics::{auroc, mean, sample_sd};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    Logistic { ridge: f64 },
    Gbt(GbtParams),
}

impl Learner {
    /// Short name used in reports: `lr` or `gbt`.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Logistic { .. } => "lr",
            Self::Gbt(_) => "gbt",
        }
    }

    pub fn fit(&self, design: &Design, labels: &[u8]) -> Result<FittedLearner> {
        match self {
            Self::Logistic { ridge } => fit_logistic_irls(design, labels, *ridge).map(FittedLearner::Logistic),
            Self::Gbt(params) => fit_gbt(design, labels, params).map(FittedLearner::Gbt),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedLearner {
    Logistic(FittedLinearModel),
    Gbt(GbtModel),
}

impl FittedLearner {
    pub fn predict(&self, design: &Design) -> Vec<f64> {
        match self {
            Self::Logistic(m) => m.predict_proba(design),
            Self::Gbt(m) => predict_gbt(m, design),
        }
    }
}

/// Fold index per row. Each class is shuffled separately and dealt
/// round-robin, so every fold gets `floor` or `ceil` of its share.
pub fn stratified_folds(labels: &[u8], k: usize, stream: &mut RngStream) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidParameter("cross-validation needs k >= 2".into()));
    }
    let mut folds = vec![0; labels.len()];
    let mut offset = 0;
    for class in [0u8, 1u8] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| (labels[i] != 0) == (class == 1)).collect();
        if members.len() < k {
            return Err(Error::InvalidParameter(format!(
                "class {class} has {} records, fewer than {k} folds; every fold needs both classes",
                members.len()
            )));
        }
        stream.shuffle(&mut members);
        for (pos, &i) in members.iter().enumerate() {
            folds[i] = (pos + offset) % k;
        }
        // Continue dealing where the first class stopped to balance fold sizes.
        offset = members.len() % k;
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_aurocs: Vec<f64>,
    pub mean_auroc: f64,
    pub sd_auroc: f64,
    /// Held-out prediction for every row.
    pub oof_scores: Vec<f64>,
    /// AUROC of the pooled held-out predictions.
    pub oof_auroc: f64,
}

pub fn cross_validate(
    learner: &Learner,
    design: &Design,
    labels: &[u8],
    k: usize,
    stream: &mut RngStream,
) -> Result<CvResult> {
    if labels.len() != design.n_rows {
        return Err(Error::InvalidParameter("labels and design rows differ".into()));
    }
    let folds = stratified_folds(labels, k, stream)?;
    let mut oof_scores = vec![0.0; labels.len()];
    let mut fold_aurocs = Vec::with_capacity(k);
    for fold in 0..k {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] != fold).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == fold).collect();
        let train_labels: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let test_labels: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
        let fitted = learner.fit(&design.select_rows(&train), &train_labels)?;
        let scores = fitted.predict(&design.select_rows(&test));
        fold_aurocs.push(auroc(&scores, &test_labels)?);
        for (&i, s) in test.iter().zip(scores) {
            oof_scores[i] = s;
        }
    }
    Ok(CvResult {
        mean_auroc: mean(&fold_aurocs),
        sd_auroc: sample_sd(&fold_aurocs),
        oof_auroc: auroc(&oof_scores, labels)?,
        fold_aurocs,
        oof_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use alloc::string::String;

    fn random_design(n: usize, seed: u64) -> (Design, Vec<u8>) {
        let mut s = derive_stream(seed, "test/cv");
        let mut values = Vec::with_capacity(n * 3);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(1.0);
            values.push(s.next_standard_normal());
            values.push(s.next_standard_normal());
            y.push(u8::from(s.next_open01() < 0.3));
        }
        let names = ["(intercept)", "a", "b"].map(String::from).to_vec();
        (Design::new(names, values, true).unwrap(), y)
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let y: Vec<u8> = (0..103).map(|i| u8::from(i % 4 == 0)).collect();
        let folds = stratified_folds(&y, 5, &mut derive_stream(1, "f")).unwrap();
        for f in 0..5 {
            let size = folds.iter().filter(|&&x| x == f).count();
            let pos = (0..y.len()).filter(|&i| folds[i] == f && y[i] == 1).count();
            assert!((20..=21).contains(&size), "fold size {size}");
            assert!((5..=6).contains(&pos), "positives {pos}");
        }
    }

    #[test]
    fn too_few_of_a_class_is_diagnosed() {
        let y = [1, 0, 0, 0, 0, 0, 0];
        let err = stratified_folds(&y, 5, &mut derive_stream(1, "f")).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(m) if m.contains("fewer than 5 folds")));
    }

    #[test]
    fn null_signal_gives_chance_auroc() {
        let (d, y) = random_design(5000, 3);
        for learner in [Learner::Logistic { ridge: 0.0 }, Learner::Gbt(GbtParams::default())] {
            let r = cross_validate(&learner, &d, &y, 5, &mut derive_stream(9, "cv")).unwrap();
            assert!((r.mean_auroc - 0.5).abs() < 0.05, "{} {}", learner.name(), r.mean_auroc);
        }
    }

    #[test]
    fn leaked_label_gives_near_perfect_auroc() {
        let (mut d, y) = random_design(2000, 4);
        for (i, &label) in y.iter().enumerate() {
            d.values[i * 3 + 1] = f64::from(label);
        }
        for learner in [Learner::Logistic { ridge: 1e-4 }, Learner::Gbt(GbtParams::default())] {
            let r = cross_validate(&learner, &d, &y, 5, &mut derive_stream(9, "cv")).unwrap();
            assert!(r.mean_auroc > 0.99, "{} {}", learner.name(), r.mean_auroc);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let (d, y) = random_design(600, 5);
        let learner = Learner::Gbt(GbtParams {
            n_trees: 10,
            ..GbtParams::default()
        });
        let a = cross_validate(&learner, &d, &y, 4, &mut derive_stream(2, "cv")).unwrap();
        let b = cross_validate(&learner, &d, &y, 4, &mut derive_stream(2, "cv")).unwrap();
        assert_eq!(a, b);
    }
}
