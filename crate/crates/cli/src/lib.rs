//! Command-line driver: scenario configuration, runs, result files and
//! resolution studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod convergence;
pub mod output;
pub mod scenario;

pub use config::{ConfigError, OutputFormat, Scenario, ScenarioConfig};
pub use convergence::{convergence_study, ConvergenceReport, Study};
pub use scenario::{run_scenario, RunReport};

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "ANISO_SPH_THREADS";
