use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] cellfree_core::Error),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed scenario file: {0}")]
    Scenario(String),
    #[error("malformed channel file: {0}")]
    ChannelFile(String),
    #[error("invalid experiment: {0}")]
    Experiment(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SimError {
    /// Short category used in the machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::Core(cellfree_core::Error::SolverFailure { .. }) => "solver_failure",
            SimError::Core(cellfree_core::Error::Config(_)) => "config",
            SimError::Core(cellfree_core::Error::Domain(_)) => "domain",
            SimError::Core(cellfree_core::Error::Dimension(_)) => "dimension",
            SimError::Read { .. } | SimError::Write { .. } => "io",
            SimError::Scenario(_) => "scenario",
            SimError::ChannelFile(_) => "channel_file",
            SimError::Experiment(_) => "experiment",
            SimError::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
