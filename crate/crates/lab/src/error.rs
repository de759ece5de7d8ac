use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("gate failure: {0}")]
    Gate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit status: 2 config, 3 gate, 4 numerical, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Gate(_) => 3,
            LabError::Numerical(_) => 4,
            LabError::Io(_) => 1,
        }
    }

    /// Maps an engine error raised while building inputs.
    pub fn invalid(e: spdv_core::Error) -> Self {
        use spdv_core::Error as E;
        match e {
            E::FellerTooSmall { .. } | E::FellerGateFailed { .. } => LabError::Gate(e.to_string()),
            _ => LabError::Config(e.to_string()),
        }
    }
}

impl From<spdv_core::Error> for LabError {
    fn from(e: spdv_core::Error) -> Self {
        use spdv_core::Error as E;
        match e {
            E::FellerTooSmall { .. } | E::FellerGateFailed { .. } | E::POutOfRange { .. } => {
                LabError::Gate(e.to_string())
            }
            E::NumericalFailure { .. } | E::NonFinite(_) | E::InsufficientResolvedLevels { .. } => {
                LabError::Numerical(e.to_string())
            }
            E::InvalidParameter { .. } | E::NegativeSviTotalVariance { .. } => LabError::Config(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spdv_core::Error as E;

    #[test]
    fn exit_codes() {
        assert_eq!(LabError::from(E::FellerTooSmall { four_k_theta: 0.1, xi_sq: 0.2 }).exit_code(), 3);
        assert_eq!(LabError::from(E::NumericalFailure { path: 3, step: 1 }).exit_code(), 4);
        assert_eq!(LabError::from(E::InvalidParameter { name: "rho", reason: "x" }).exit_code(), 2);
        assert_eq!(LabError::invalid(E::NonFinite("k")).exit_code(), 2);
        assert_eq!(LabError::invalid(E::FellerTooSmall { four_k_theta: 0.1, xi_sq: 0.2 }).exit_code(), 3);
    }
}
