//! Removal-enabled random forests with exact unlearning, a naive
//! retrain-from-scratch baseline, a sharded (SISA-style) ensemble
//! wrapper, and a benchmark harness comparing the two strategies on
//! consistency and wall-clock cost.
//!
//! # Crate layout
//!
//! - [`dataset`] — labeled feature matrices with stable row ids, plus
//!   synthetic generation, CSV ingestion, hashed encoding, splitting,
//!   and deletion operations.
//! - [`forest`] — the removal-enabled forest ([`DareForest`]) whose
//!   cached split statistics make single-row deletion exact, and the
//!   plain [`NaiveForest`] baseline.
//! - [`sisa`] — sharding/isolation/slicing/aggregation around
//!   constituent forests.
//! - [`harness`] — trial runner for the strategy x size x percentage
//!   grid, with metric and timing protocol.
//! - [`report`] — append-only text log, CSV emission, and the
//!   log-to-CSV tidier.
//! - [`chart`] — dependency-free SVG rendering of benchmark results.
//!
//! # Concurrency
//!
//! Values are immutable once constructed except through `&mut`
//! operations; the library is single-writer / multi-reader. Trees and
//! shards are independent, so callers may parallelize fits or fan out
//! reads, but a model must not receive concurrent deletions.

pub mod chart;
pub mod dataset;
pub mod error;
pub mod forest;
pub mod harness;
pub mod hash;
pub mod metrics;
pub mod report;
pub mod selftest;
pub mod sisa;
mod wire;

pub use dataset::{
    delete_percentage, encode, ingest_csv, reduce_to_target_size, CsvSchema, Dataset,
    EncodingConfig, RawRecord,
};
pub use error::{Error, Result};
pub use forest::{
    gini_gain, naive_retrain, ClassCounts, DareForest, DeletionReport, ForestParams, NaiveForest,
};
pub use harness::{
    run_grid, run_grid_parallel, run_naive_trial, run_sisa_trial, trial_datasets,
    trial_deletion_ids, trial_model_seed, GridOutcome, GridSpec, Strategy, TrialConfig,
    TrialResult,
};
pub use metrics::{agreement, consistency, percent_change, Stopwatch};
pub use sisa::{Aggregation, ConstituentKind, SisaConfig, SisaEnsemble};
