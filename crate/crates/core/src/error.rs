use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {0} outside [0, 1]")]
    Domain(f64),
    #[error("value {value} outside the image [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("invalid word: {0}")]
    Word(String),
    #[error("root finder did not converge in [{lo}, {hi}]")]
    NoConvergence { lo: f64, hi: f64 },
    #[error("iteration cap {cap} exceeded; last bracket [{lo}, {hi}]")]
    IterationCap { cap: usize, lo: f64, hi: f64 },
    #[error("degenerate instance: {0}")]
    Degenerate(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
