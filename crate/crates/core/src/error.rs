use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed model spec: {0}")]
    MalformedSpec(String),
    #[error("adjacency is not symmetric: {0} lists {1} but not conversely")]
    NonSymmetricAdjacency(usize, usize),
    #[error("generator {0} is not an automorphism of the graph: {1}")]
    NotAnAutomorphism(usize, String),
    #[error("point {0} is outside the model's point space")]
    PointOutsideModel(String),
    #[error("expansion cap exceeded: requested radius {requested}, cap {cap}")]
    CapExceeded { requested: u64, cap: u64 },
    #[error("points lie in different components")]
    Disconnected,
    #[error("paths do not form a triangle")]
    NotATriangle,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("element is not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("axis window mismatch: need {needed}, axis covers {available}")]
    WindowMismatch { needed: u64, available: u64 },
    #[error("invalid word: {0}")]
    InvalidWord(String),
}

pub type Result<T> = std::result::Result<T, Error>;
