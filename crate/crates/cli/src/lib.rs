//! Experiment driver for `gnlab`: TOML configs in, canonically ordered
//! `(P_dbm, N, metric, value, std_error, seed, config_hash)` rows out.

pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use compare::{compare, CompareReport, Tolerance};
pub use config::{ExperimentConfig, ExperimentKind, Format, Memory};
pub use error::{CliError, Result};
pub use output::{Row, SweepResult};
pub use run::{execute, run};
