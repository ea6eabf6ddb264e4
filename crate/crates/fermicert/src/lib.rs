//! Configuration-driven certification runs on top of `fermicert-core`.
//!
//! A run reads one JSON [`config::ExperimentConfig`], executes a single task
//! and writes a JSON report, a CSV table and (for time or step series) a
//! whitespace-separated plot-data file into the output directory.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{parse, validate, Diagnostic, ExperimentConfig, Task};
pub use error::{RunError, EXIT_CERTIFICATION, EXIT_OK, EXIT_USAGE};
pub use run::{run, Outcome, RunOptions, Status};
