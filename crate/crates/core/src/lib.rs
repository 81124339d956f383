//! Dead fuel moisture estimation from grouped tabular predictors.
//!
//! The crate covers the whole experiment pipeline: ingestion and pairing of
//! gridded predictors with in-situ observations ([`ingest`]), climatology
//! baselines ([`climatology`]), site-aware train/validation/test splitting
//! ([`split`]), three regressors ([`models`]), TPE hyperparameter search
//! ([`hpo`]), metrics and skill scores ([`metrics`]), feature attribution
//! ([`explain`]), a deterministic synthetic data generator ([`synth`]) and
//! the orchestration used by the command line tool ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod climatology;
pub mod error;
pub mod explain;
pub mod harness;
pub mod hpo;
pub mod ingest;
pub mod metrics;
pub mod models;
pub mod split;
pub mod synth;
pub mod tabular;

pub use error::{Error, Result};
