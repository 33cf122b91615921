//! Multi-site synthetic clinical data simulator.
//!
//! A frozen ground-truth logistic risk model is sampled from a declarative
//! [`SimulationConfig`], patients are drawn independently of that model, and
//! binary outcomes are assigned against per-site thresholds calibrated to hit
//! prevalence targets. The [`analysis`] module carries the harness used to
//! check that the generated data behaves as configured: logistic-regression
//! effect recovery, prevalence checks with bootstrap intervals, and the
//! held-out-site generalisability experiment.
//!
//! The crate is `no_std` and only needs `alloc`. Parsing config documents,
//! file formats and the command-line tool live in the `simgen` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod config;
pub mod dataset;
pub mod error;
pub mod features;
pub mod math;
pub mod missing;
pub mod model;
pub mod outcome;
pub mod rng;

pub use config::{SimulationConfig, Violation};
pub use dataset::{simulate, Dataset, Simulation};
pub use error::{Error, Result};
pub use model::GroundTruthModel;
pub use rng::RngStream;

/// Name and version recorded in dataset metadata.
pub const GENERATOR_NAME: &str = "simgen";
pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");
