use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// The series has (numerically) zero variance, so autocorrelations are undefined.
    #[error("series has zero variance")]
    DegenerateSeries,

    #[error("evaluation grid misses {tail_mass:e} of the target's probability mass")]
    Coverage { tail_mass: f64 },

    #[error("pilot estimate failed: S(a) = {s_a}, T(b) = {t_b}")]
    PilotFailure { s_a: f64, t_b: f64 },

    #[error(
        "bandwidth equation has no sign change on [{lo}, {hi}] (residuals {residual_lo}, {residual_hi})"
    )]
    RootNotFound {
        lo: f64,
        hi: f64,
        residual_lo: f64,
        residual_hi: f64,
    },

    #[error("objective is not finite at h = {h}")]
    ObjectiveEvaluation { h: f64 },

    #[error("proposal tuning failed after {steps} steps (last sd {last_sd}, acceptance {last_acceptance})")]
    Tuning {
        steps: usize,
        last_sd: f64,
        last_acceptance: f64,
    },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(invalid(alloc::format!(
            "bandwidth must be positive and finite, got {h}"
        )))
    }
}
