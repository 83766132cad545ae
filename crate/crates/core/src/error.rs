use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no edge data to fold")]
    EmptyFold,

    #[error("generator is not invertible: {0}")]
    NonInvertibleGenerator(String),

    #[error("unsupported m-scheme / t-conorm pairing: {0}")]
    UnsupportedPairing(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),

    #[error("negative edge weight {weight} on ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, weight: f64 },

    #[error("index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("k = {k} must satisfy 1 <= k < n = {n}")]
    InvalidK { k: usize, n: usize },

    #[error("all {k} nearest neighbours of point {center} coincide with it")]
    DegenerateNeighborhood { center: usize, k: usize },

    #[error("graph is disconnected: {} components with sizes {:?}", sizes.len(), sizes)]
    Disconnected { sizes: Vec<usize> },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
