use alloc::string::String;
use alloc::vec::Vec;

use crate::config::Violation;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration has {} violation(s)", .0.len())]
    InvalidConfig(Vec<Violation>),

    #[error(
        "interaction candidate count {candidates} exceeds cap {cap} \
         ({terms} predictive terms, max order {max_order})"
    )]
    InteractionCap {
        candidates: u128,
        cap: u64,
        terms: usize,
        max_order: u32,
    },

    #[error("no column generator registered under '{0}'")]
    UnknownGenerator(String),

    #[error("site {0} has no records")]
    EmptySite(usize),

    #[error(
        "threshold calibration did not converge after {iterations} iterations: \
         bracket [{low}, {high}], residual {residual:e}"
    )]
    CalibrationFailed {
        iterations: u32,
        low: f64,
        high: f64,
        residual: f64,
    },

    #[error("labels contain a single class")]
    SingleClass,

    #[error("design matrix is rank deficient; add a ridge penalty")]
    RankDeficient,

    #[error("effects are not identifiable: {0}")]
    NotIdentifiable(String),

    #[error("could not draw a holdout with both classes after {0} attempts")]
    HoldoutFailed(u32),
}
