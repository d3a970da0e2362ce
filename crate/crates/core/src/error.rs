use thiserror::Error;

/// Errors surfaced by the mapping library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("grid dimensions do not match: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("operation requires at least {required} grids, got {got}")]
    NotEnoughGrids { required: usize, got: usize },

    #[error("pose ({x}, {y}) lies outside the grid")]
    PoseOutOfBounds { x: f64, y: f64 },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("probability {0} is zero or negative; log-domain update undefined")]
    NonPositiveProbability(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("neighbor relation is not symmetric: {0} lists {1} but not vice versa")]
    AsymmetricNeighbors(usize, usize),

    #[error("matrix is not doubly stochastic")]
    NotDoublyStochastic,

    #[error("malformed PGM: {0}")]
    PgmFormat(String),

    #[error("world has no free cells")]
    NoFreeSpace,

    #[error("robot {robot} initial pose ({x}, {y}) is not in free space")]
    BadPlacement { robot: usize, x: f64, y: f64 },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
