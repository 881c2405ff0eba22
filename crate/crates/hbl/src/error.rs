use hbl_core::evolution::EvolutionError;
use hbl_core::ggmt::GgmtError;
use hbl_core::spectral::SpectralError;
use hbl_core::ModelError;
use serde_json::{json, Value};

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{message}")]
    Disagreement { message: String, diagnostic: Value },
    #[error("{message}")]
    Blowup { message: String, diagnostic: Value },
    #[error("{message}")]
    Tuning { message: String, diagnostic: Value },
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Disagreement { .. } => 3,
            CliError::Blowup { .. } => 4,
            CliError::Tuning { .. } => 5,
            CliError::Numerical(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn diagnostic(&self) -> Option<&Value> {
        match self {
            CliError::Disagreement { diagnostic, .. }
            | CliError::Blowup { diagnostic, .. }
            | CliError::Tuning { diagnostic, .. } => Some(diagnostic),
            _ => None,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::MethodDisagreement { matrix, shooting, near_zero } => CliError::Disagreement {
                message: e.to_string(),
                diagnostic: json!({
                    "matrix_count": matrix,
                    "shooting_count": shooting,
                    "nearest_zero": near_zero,
                }),
            },
            SpectralError::Stiffness { .. } => CliError::Numerical(e.to_string()),
            // NoCrossing is a status, not a failure; callers that reach this
            // conversion have already handled it
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<GgmtError> for CliError {
    fn from(e: GgmtError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::BlowupDetected { tau, sup, coef } => CliError::Blowup {
                message: e.to_string(),
                diagnostic: json!({ "tau": tau, "sup_norm": sup, "unstable_coef": coef }),
            },
            EvolutionError::NoSignChange { coef_lo, coef_hi } => CliError::Tuning {
                message: e.to_string(),
                diagnostic: json!({ "coef_lo": coef_lo, "coef_hi": coef_hi }),
            },
            EvolutionError::Spectral(s) => s.into(),
            EvolutionError::NoBlowup { .. } | EvolutionError::OutOfHistory { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}
