//! Validation harness: model fitting, metrics and the reports built on them.

pub mod cv;
pub mod design;
pub mod experiment;
pub mod gbt;
pub mod logistic;
pub mod metrics;
pub mod reports;

pub use cv::{cross_validate, CvResult, FittedLearner, Learner};
pub use design::{build_design, Design, DesignData, DesignOptions};
pub use experiment::{
    generalisability_experiment, DegradationRow, DegradationTable, ExperimentSettings, SiteEncoding, TrialRecord,
};
pub use gbt::{fit_gbt, predict_gbt, GbtModel, GbtParams};
pub use logistic::{fit_logistic_irls, FittedLinearModel};
pub use metrics::{auroc, bootstrap_ci};
pub use reports::{effect_recovery_report, prevalence_report, PrevalenceReport, RecoveryReport};
