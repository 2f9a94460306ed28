use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("constant-rank violation: expected rank {expected}, found {found} at x = {x:?}, lambda = {lambda:?}")]
    RankViolation {
        expected: usize,
        found: usize,
        x: Vec<f64>,
        lambda: Vec<f64>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numeric divergence: {0}")]
    Diverged(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("unknown label `{label}` in {family} catalog (known: {known})")]
    UnknownLabel {
        family: &'static str,
        label: String,
        known: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
