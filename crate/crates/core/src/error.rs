use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("non-finite input `{0}`")]
    NonFinite(&'static str),

    /// The backward Euler-Maruyama root needs `4 k theta > xi^2`.
    #[error("backward Euler-Maruyama requires 4*k*theta > xi^2 (got 4*k*theta = {four_k_theta}, xi^2 = {xi_sq})")]
    FellerTooSmall { four_k_theta: f64, xi_sq: f64 },

    #[error("Feller ratio {nu} does not exceed the scheme threshold {nu_star}")]
    FellerGateFailed { nu: f64, nu_star: f64 },

    #[error("moment order {p} outside the admissible range [1, {p_star})")]
    POutOfRange { p: f64, p_star: f64 },

    #[error("SVI total variance is negative at z = {z}")]
    NegativeSviTotalVariance { z: f64 },

    #[error("only {found} resolved ladder levels, at least 3 are needed")]
    InsufficientResolvedLevels { found: usize },

    #[error("non-finite value on path {path} at step {step}")]
    NumericalFailure { path: u64, step: usize },
}

pub(crate) fn ensure_finite(value: f64, name: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
