use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no convergence: {message} (closest approach {closest_approach:.3e})")]
    NoConvergence { message: String, closest_approach: f64 },

    #[error("eigensolve failed: residual {residual:.3e}")]
    Eigensolve { residual: f64 },

    #[error("precision error: tolerance {tol:.1e} unachievable for nu={nu}, z={z}")]
    Precision { nu: f64, z: f64, tol: f64 },

    #[error("truncation error: tail mass {tail:.3e} exceeds {limit:.1e}")]
    Truncation { tail: f64, limit: f64 },

    #[error("causal margin violated: T={t_final} needs X_max >= {suggested_x_max:.4}")]
    CausalMargin { t_final: f64, suggested_x_max: f64 },

    #[error("Nyquist violation: max admissible tau is {max_tau:.4}")]
    Nyquist { max_tau: f64 },

    #[error("insufficient resolution: {usable} usable shells, need 3")]
    InsufficientResolution { usable: usize },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the CLI. Each failure class maps to its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) => 2,
            Error::CausalMargin { .. } => 3,
            Error::Domain(_)
            | Error::NoConvergence { .. }
            | Error::Eigensolve { .. }
            | Error::Precision { .. }
            | Error::Truncation { .. }
            | Error::Nyquist { .. }
            | Error::InsufficientResolution { .. } => 4,
            Error::Integrity(_) => 5,
            Error::Io(_) | Error::Json(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Eigensolve { .. } => "eigensolve",
            Error::Precision { .. } => "precision",
            Error::Truncation { .. } => "truncation",
            Error::CausalMargin { .. } => "causal_margin",
            Error::Nyquist { .. } => "nyquist",
            Error::InsufficientResolution { .. } => "insufficient_resolution",
            Error::Integrity(_) => "integrity",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
