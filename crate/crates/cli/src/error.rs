use sparsebench::ensembles::EnsembleError;
use sparsebench::experiments::ExperimentError;
use sparsebench::guarantees::GuaranteeError;
use sparsebench::recovery::RecoveryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or missing input; exit 1.
    #[error("{0}")]
    Input(String),
    /// A solver or experiment failed; exit 2.
    #[error("{0}")]
    Solver(String),
    /// Exact computation over budget; exit 3.
    #[error("{message}\nsuggested: {suggestion}")]
    Budget { message: String, suggestion: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Budget { .. } => 3,
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RecoveryError> for CliError {
    fn from(e: RecoveryError) -> Self {
        match e {
            RecoveryError::InvalidInput(msg) => CliError::Input(msg),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<GuaranteeError> for CliError {
    fn from(e: GuaranteeError) -> Self {
        match e {
            GuaranteeError::BudgetExceeded { .. } => CliError::Budget {
                message: e.to_string(),
                suggestion: "rerun with --mode mc".into(),
            },
            GuaranteeError::Recovery(r) => r.into(),
            GuaranteeError::InvalidInput(_) | GuaranteeError::ColumnsNotNormalized | GuaranteeError::KTooSmall(_) => {
                CliError::Input(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidConfig(msg) => CliError::Input(msg),
            ExperimentError::Guarantee(g) => g.into(),
            ExperimentError::Recovery(r) => r.into(),
            other => CliError::Solver(other.to_string()),
        }
    }
}
