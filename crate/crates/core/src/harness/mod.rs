//! Data, synthetic markets, experiments, invariant checks and benchmarks.

mod bench;
mod data;
mod experiment;
mod generate;
mod verify;

pub use bench::{bench, format_bench_table, BenchRow};
pub use data::{read_returns, read_returns_from, write_returns, write_returns_to};
pub use experiment::{build_learner, run_experiment, write_trace, Algo, Experiment, ExperimentConfig, MetricsReport, TraceRow};
pub use generate::{generate, Model};
pub use verify::{verify, Check, DonsChecker, VerifyLevel, VerifyOptions, VerifyReport};

/// Version of the JSON reports written by the harness.
pub const SCHEMA_VERSION: u32 = 1;
