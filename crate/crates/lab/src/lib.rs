//! Experiment runners, file formats and the `transport-lab` CLI on top of
//! `transport-lab-core`.

pub mod cli;
pub mod config;
pub mod counterexample;
pub mod norm;
pub mod oracle;
pub mod parallel;
pub mod report;
pub mod solver;
pub mod stability;

pub use config::ExperimentConfig;
pub use report::{Check, SuiteReport, Table};

pub const ARTIFACT: &str = "transport-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core { context: String, source: transport_lab_core::Error },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl LabError {
    /// Usage and config problems are 2, including parameters the core
    /// rejects outright; everything else raised by a run is 1.
    pub fn exit_code(&self) -> i32 {
        use transport_lab_core::Error;
        match self {
            LabError::Config(_) | LabError::Io { .. } => 2,
            LabError::Core { source: Error::InvalidParameter { .. } | Error::Resolution(_), .. } => 2,
            LabError::Core { .. } => 1,
        }
    }
}

/// Attach the run that raised a core error.
pub(crate) trait Context<T> {
    fn during(self, context: impl FnOnce() -> String) -> Result<T, LabError>;
}

impl<T> Context<T> for transport_lab_core::Result<T> {
    fn during(self, context: impl FnOnce() -> String) -> Result<T, LabError> {
        self.map_err(|source| LabError::Core { context: context(), source })
    }
}
