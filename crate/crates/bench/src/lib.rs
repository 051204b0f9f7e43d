//! Benchmark harness: runs Bayesian optimization campaigns on the synthetic
//! problems and records the log hypervolume gap to the true front.

pub mod config;
pub mod io;
pub mod runner;
pub mod stats;

pub use config::{Format, Method, MethodId, RunConfig};
pub use io::{append_csv, read_csv, read_json, write_json, write_results, ResultsDocument, CSV_COLUMNS};
pub use runner::{
    in_sample_hypervolume, log_hv_difference, log_hv_gap, run_campaign, run_replication, ReplicationOutcome, RunRecord,
    LOG_HV_FLOOR,
};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Core(mobo_core::Error),
}
