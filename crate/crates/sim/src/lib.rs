//! Scenario files, channel dumps, Monte-Carlo experiment sweeps and the
//! command-line front end for `cellfree-core`.

pub mod channel_io;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod scenario_file;

pub use error::{Result, SimError};
pub use experiment::{run_experiment, ExperimentKind, ExperimentOutput, ExperimentSpec, Row};
