//! Shared fixtures for the criterion benchmarks.

use unlearn_core::{Dataset, ForestParams};

/// Benchmark dataset: synthetic, moderately separable, fixed seed.
pub fn dataset(rows: usize) -> Dataset {
    Dataset::generate_synthetic(rows, 16, 1.5, 42).expect("benchmark dataset")
}

pub fn params() -> ForestParams {
    ForestParams::default()
}
