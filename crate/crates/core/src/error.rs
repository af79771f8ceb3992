use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("singular kernel evaluation: {0}")]
    Singular(String),

    #[error("linear solve failed at omega = {omega:e}: {reason}")]
    SolveFailed { omega: f64, reason: String },

    #[error("driving pole at omega = {pole:e} collides with the frequency grid (distance {distance:e}); suggested omega_shift = {suggested_shift:e}")]
    PoleCollision { pole: f64, distance: f64, suggested_shift: f64 },

    #[error("non-causal reconstruction: {fraction:.3e} of the L2 norm lies at t < 0")]
    NonCausal { fraction: f64 },

    #[error("time marching became unstable at step {step} (dt = {dt:e})")]
    Unstable { step: usize, dt: f64 },

    #[error("query outside stored history: t = {t:e}, history ends at {t_end:e}")]
    HistoryRange { t: f64, t_end: f64 },

    #[error("observation point {index} violates the clearance rule: {reason}")]
    Clearance { index: usize, reason: String },

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("counting-rate quadrature truncation estimate {estimate:.3e} exceeds {limit:.1e}")]
    Truncation { estimate: f64, limit: f64 },

    #[error("configuration error")]
    Config(Vec<crate::cli::config::ConfigIssue>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::PoleCollision { .. } => 2,
            Error::Json(_) => 2,
            _ => 3,
        }
    }
}
