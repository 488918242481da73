use superrad_core::dtwa::DtwaError;
use superrad_core::fit::FitError;
use superrad_core::minimal::MinimalError;
use superrad_core::model::ModelError;
use superrad_core::observables::ObservableError;
use superrad_core::oracle::OracleError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    ConfigParse(String),
    #[error("{0}")]
    ConfigInvalid(String),
    #[error("unknown preset '{name}'; available: {}", available.join(", "))]
    UnknownPreset { name: String, available: Vec<String> },
    #[error("{0}")]
    Spec(#[from] ModelError),
    #[error("{0}")]
    Dtwa(#[from] DtwaError),
    #[error("{0}")]
    Minimal(#[from] MinimalError),
    #[error("{0}")]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Observable(#[from] ObservableError),
    #[error("{0}")]
    Fit(#[from] FitError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Error class printed on failure.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::ConfigParse(_) => "CONFIG_PARSE",
            CliError::ConfigInvalid(_) => "CONFIG_INVALID",
            CliError::UnknownPreset { .. } => "UNKNOWN_PRESET",
            CliError::Spec(ModelError::Detuned { .. }) => "DETUNED",
            CliError::Spec(_) => "INVALID_SPEC",
            CliError::Dtwa(e) => e.code(),
            CliError::Minimal(e) => e.code(),
            CliError::Oracle(e) => e.code(),
            CliError::Observable(e) => e.code(),
            CliError::Fit(e) => e.code(),
            CliError::Io(_) => "IO",
        }
    }

    /// Process exit status: 2 for bad input, 1 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_)
            | CliError::ConfigInvalid(_)
            | CliError::UnknownPreset { .. }
            | CliError::Spec(_) => 2,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
