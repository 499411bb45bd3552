//! Benchmark harness: planted-instance sweeps, error metrics, and plots.
//!
//! [`run_benchmark`] drives the full pipeline — generate dictionaries, plant
//! signals, solve with a grid of convex-program variants, score each trial
//! with the three metrics in [`metrics`], aggregate, and emit CSV plus SVG
//! curves. Sweeps are deterministic given the config seed and independent of
//! the parallel schedule.

pub mod bench;
pub mod metrics;
pub mod svg;

pub use bench::{run_benchmark, BenchmarkConfig, RecoveryReport, SummaryRow, TrialRow, VariantSpec};
pub use metrics::{block_contribution_error, coefficient_recovery_error, reconstruction_error};
