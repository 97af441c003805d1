//! Shared helpers for the criterion benches.

use alarmsift_core::synthetic::{generate, SyntheticSpec};
use alarmsift_core::Dataset;

/// A mid-sized deterministic dataset for benchmarking the detector.
pub fn bench_dataset() -> Dataset {
    generate(&SyntheticSpec::new("bench", 9))
}
