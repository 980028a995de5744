use std::path::PathBuf;
use thiserror::Error;

/// Process exit codes, one per failure family.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNKNOWN_EXPERIMENT: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::UnknownExperiment(_) => EXIT_UNKNOWN_EXPERIMENT,
            CliError::Io { .. } => EXIT_IO,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::UnknownExperiment(_) => "unknown-experiment",
            CliError::Io { .. } => "io",
            CliError::Numeric(_) => "numeric",
        }
    }

    /// Machine-readable rendering printed to stderr on failure.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
        .to_string()
    }
}

impl From<rieszgas_core::pointfields::PointFieldError> for CliError {
    fn from(e: rieszgas_core::pointfields::PointFieldError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<rieszgas_core::dynamics::DynamicsError> for CliError {
    fn from(e: rieszgas_core::dynamics::DynamicsError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<rieszgas_core::drift::DriftError> for CliError {
    fn from(e: rieszgas_core::drift::DriftError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<rieszgas_core::diagnostics::DiagnosticsError> for CliError {
    fn from(e: rieszgas_core::diagnostics::DiagnosticsError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<rieszgas_core::potentials::PotentialError> for CliError {
    fn from(e: rieszgas_core::potentials::PotentialError) -> Self {
        CliError::Numeric(e.to_string())
    }
}
