//! Tabular survival classification toolkit.
//!
//! The crate covers the whole pipeline for the pediatric bone-marrow-transplant
//! survival data: typed ingestion ([`tabular_io`]), imputation, dummy encoding
//! and scaling ([`preprocess`]), chi-squared feature ranking ([`chi2_select`]),
//! seven natively implemented classifiers ([`learners`]), evaluation
//! ([`metrics`]), grid-search cross-validation ([`tuning`]) and the A/B/C/D
//! experiment runner with report emission ([`experiments`]).
//!
//! ```no_run
//! use bmt_core::experiments::{ExperimentConfig, ExperimentId, run_experiment};
//!
//! # fn main() -> bmt_core::Result<()> {
//! let config = ExperimentConfig::preset(ExperimentId::A, "data/bone-marrow.arff");
//! let report = run_experiment(&config)?;
//! for model in &report.models {
//!     println!("{:>4} accuracy {:.4}", model.algorithm, model.metrics.accuracy);
//! }
//! # Ok(())
//! # }
//! ```

pub mod chi2_select;
pub mod error;
pub mod experiments;
pub mod learners;
pub mod metrics;
pub mod preprocess;
pub mod tabular_io;
pub mod tuning;

pub use error::{Error, Result};
