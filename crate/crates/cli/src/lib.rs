//! Configuration, orchestration and file output behind the `mdescent` binary.

use std::path::PathBuf;

pub mod commands;
pub mod config;
pub mod svg;

pub use commands::{
    cmd_compare, cmd_simulate, cmd_spectrum, cmd_theory, compare, empirical_csv, parse_empirical_csv, parse_theory_csv, run_simulation,
    run_spectrum, run_theory, spectrum_csv, theory_csv, CompareReport, EmpiricalRecord, EmpiricalRow, TheoryRow,
};
pub use config::{Experiment, ExperimentConfig, Format, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] mdescent::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}
