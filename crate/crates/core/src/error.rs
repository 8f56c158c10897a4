use thiserror::Error;

/// Errors raised by the rate, quadrature and kinetics layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate transition {j} -> {j_prime}: zero transition energy")]
    DegenerateTransition { j: u32, j_prime: u32 },

    #[error("quadrature failed to reach tolerance: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("rate computation failed for {j} -> {j_prime}: {source}")]
    Rate {
        j: u32,
        j_prime: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("time evolution failed: {0}")]
    StiffnessFailure(String),

    #[error("steady state is not unique: null space dimension {dimension}")]
    NonUniqueSteadyState { dimension: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable category, used for CLI exit reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::Domain(_) => "domain",
            Error::DegenerateTransition { .. } => "degenerate_transition",
            Error::QuadratureFailure { .. } => "quadrature_failure",
            Error::Rate { source, .. } => source.category(),
            Error::StiffnessFailure(_) => "stiffness_failure",
            Error::NonUniqueSteadyState { .. } => "non_unique_steady_state",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) => 2,
            Error::Io(_) => 3,
            Error::QuadratureFailure { .. } => 4,
            Error::StiffnessFailure(_) => 5,
            Error::Rate { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
