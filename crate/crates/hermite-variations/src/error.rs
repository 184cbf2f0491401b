use thiserror::Error;

#[derive(Debug, Error)]
pub enum HvError {
    #[error("parameter out of domain: {0}")]
    ParamDomain(String),
    #[error("quantity undefined in this parameter regime: {0}")]
    Regime(String),
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("circulant embedding not nonnegative definite: eigenvalue {value:.6e} at index {index}")]
    Embedding { index: usize, value: f64 },
    #[error("covariance matrix not positive definite: pivot {pivot} is {value:.6e}")]
    Factorization { pivot: usize, value: f64 },
    #[error("quadrature accuracy target not met: {0}")]
    Quadrature(String),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("resource ceiling exceeded: {0}")]
    Resource(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported schema version: found {found}, expected {expected}")]
    Schema { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for HvError {
    fn from(e: serde_json::Error) -> Self {
        HvError::Serde(e.to_string())
    }
}

impl From<csv::Error> for HvError {
    fn from(e: csv::Error) -> Self {
        HvError::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HvError>;
