use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("divergent region: Re(s) = {re} is not above the abscissa {abscissa}")]
    Divergent { re: f64, abscissa: f64 },
    #[error("point budget exceeded: {requested} points requested, budget {budget}; try depth {suggested_depth}")]
    Resource {
        requested: f64,
        budget: usize,
        suggested_depth: u32,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("string has no geometric tail, so no lattice closed form exists")]
    NotLattice,
    #[error("total length diverges; not an ordinary fractal string")]
    NotOrdinary,
    #[error("outside the supported scope: {0}")]
    Scope(String),
    #[error("pole at s = 0 of the closed form")]
    PoleAtZero,
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures caused by the supplied data rather than by the numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::InvalidInput(_)
                | Error::Io(_)
                | Error::Parse(_)
                | Error::Degenerate(_)
                | Error::InsufficientData(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
