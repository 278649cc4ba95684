//! Experiment harness for random N-soliton ensembles of the focusing
//! nonlinear Schrödinger equation: configuration, seeded parallel trials,
//! reductions with standard errors, CSV/JSON output and the invariant suite.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod output;
pub mod report;
pub mod seed;
pub mod stats;
pub mod verify;

pub use config::ExperimentConfig;
pub use ensemble::{run_clt, run_corr, run_lln, EnsembleSummary, RunOptions};
pub use error::{LabError, Result};
pub use report::Check;
pub use verify::{run_verify, VerifyReport};
