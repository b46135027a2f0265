//! Experiment runner for `licm-core`: experiment files, run grids, metrics
//! output, bundled presets and aggregation benchmarks.

pub mod bench;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod runner;

pub use experiment::{AggregatorSpec, DataSource, ExperimentFile, RuleKind, RunSpec, TaskSettings};
pub use output::{read_metrics_csv, write_metrics_csv, RunSummary};
pub use runner::{build_config, execute, run_grid, DataCache, Datasets, GridEntry};
