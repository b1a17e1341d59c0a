use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inadmissible state: {0}")]
    Inadmissible(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid axis {axis} for a {dim}D state")]
    InvalidAxis { axis: usize, dim: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("basis/formulation mismatch: {0}")]
    Pairing(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
