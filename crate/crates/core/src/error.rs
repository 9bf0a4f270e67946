use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("size exceeds memory cap: {0}")]
    MemoryCap(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("state error: {0}")]
    State(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
