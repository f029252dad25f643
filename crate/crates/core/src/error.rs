use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{lo}, {hi}]: estimated error {estimate:e} exceeds {tolerance:e}")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("path has not been absorbed: final block count is {0}")]
    NotAbsorbed(usize),

    #[error("edge ({0}, {1}) is not present in the tree")]
    MissingEdge(usize, usize),

    #[error("lookback exhausted: {remaining} lineages remain at the start of the event log (t = {start})")]
    LookbackExhausted { remaining: usize, start: f64 },

    #[error("time {t} is outside the simulated window [{lo}, {hi}]")]
    OutOfWindow { t: f64, lo: f64, hi: f64 },

    #[error("event times must be strictly increasing: {prev} followed by {next}")]
    NonMonotoneTime { prev: f64, next: f64 },

    #[error("unknown test `{0}`")]
    UnknownTest(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
