use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated one of its type invariants.
    #[error("{name} = {value} is invalid: must be {constraint}")]
    InvalidInput {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("non-finite argument {0}")]
    NonFinite(f64),

    /// The Kirk volatility is exactly zero, so the skew correction is singular.
    #[error("degenerate Kirk volatility: the skew correction is undefined at a = 0")]
    DegenerateKirkVolatility,

    #[error("skew correction collapsed volatility to {0}")]
    CollapsedVolatility(f64),

    #[error("benchmark price {0} is not positive; percentage error undefined")]
    NonPositiveBenchmark(f64),

    #[error("no grid slice at rho = {rho}, T = {maturity}")]
    MissingSlice { rho: f64, maturity: f64 },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("I/O error after {rows_written} rows: {source}")]
    Io {
        rows_written: usize,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::InvalidInput {
            name,
            value,
            constraint,
        }
    }

    /// True for errors caused by bad caller input rather than numerical degeneracy.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidInput { .. } | Error::Config { .. })
    }
}
