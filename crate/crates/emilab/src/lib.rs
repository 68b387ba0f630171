//! Experiment driver for the EMI numerical laboratory.

pub mod config;
pub mod harness;
pub mod report;

pub use config::{ConfigError, ExperimentSpec, SolverChoice};
pub use harness::{
    run_spectral_suite, run_table, run_table_cells, run_table_refinement, run_table_tau, Problem, ResultRow,
    SpectralCheck, SpectralRecord, TableKind,
};
pub use report::{results_to_string, summary_json, write_quantiles, write_results, RESULT_HEADER};
