use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("unsupported dimension {0}, expected 2 or 3")]
    UnsupportedDimension(usize),
    #[error("coordinate count {len} is not a multiple of dimension {dim}")]
    RaggedCoordinates { len: usize, dim: usize },
    #[error("point {index} has a non-finite coordinate on axis {axis}")]
    NonFiniteCoordinate { index: usize, axis: usize },
    #[error("eps must be finite and positive, got {0}")]
    InvalidEps(f64),
    #[error("minpts must be at least 2, got {0}")]
    InvalidMinPts(usize),
    #[error("brute-force reference refused: {n} points exceeds the cap of {cap}")]
    OracleCapExceeded { n: usize, cap: usize },
    #[error("could not place {k} centers at separation {separation} after {attempts} attempts")]
    CenterPlacement {
        k: usize,
        separation: f64,
        attempts: usize,
    },
    #[error("invalid generator argument: {0}")]
    InvalidGenerator(&'static str),
    #[error("failed to build a thread pool: {0}")]
    ThreadPool(String),
}
