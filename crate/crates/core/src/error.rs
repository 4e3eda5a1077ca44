use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("omega_z = 0: the adiabatic drive amplitude diverges; apply the resonant substitution instead")]
    ResonantDetuning,

    #[error("no root of the dressed detuning in [{lo}, {hi}]")]
    RootNotFound { lo: f64, hi: f64 },

    #[error("truncation too small: {0}")]
    TruncationTooSmall(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Hilbert space dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("integrator step size underflow at t = {t}; the problem looks stiff, use the steady-state solver instead")]
    Stiff { t: f64 },

    #[error("steady state is not unique: {0}")]
    NonUniqueSteadyState(String),

    #[error("steady-state solver did not converge: {0}")]
    SteadyStateFailed(String),

    #[error("accuracy: {0}")]
    Accuracy(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("perturbative precondition violated: {0}")]
    Perturbativity(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether this error stems from user input rather than a numerical failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidArgument(_) | Error::UnsupportedRegime(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
