use thiserror::Error;

/// Errors produced by the numerical engines and the experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// A prior set or product model violates its invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A caller-supplied argument is outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Grid, lattice, horizon or seed configuration is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite value appeared during a computation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An adversary emitted a volatility outside the band.
    #[error("strategy violation at step {step}: theta = {theta} outside [{lo}, {hi}]")]
    StrategyViolation {
        step: usize,
        theta: f64,
        lo: f64,
        hi: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
