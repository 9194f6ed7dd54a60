//! Experiment driver: config files, presets, and the run that writes CSV
//! tables, a summary and optional snapshots.

pub mod config;
pub mod experiment;

pub use config::{preset, ExperimentConfig, ParseError, PRESETS};
pub use experiment::{output_dir, run_experiment, RunError};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_ENV: &str = "VORTLAB_OUTPUT_DIR";

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONTRACT_FAILED: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const RUNTIME: u8 = 3;
}
