use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported ambient dimension {0} (supported: 2, 3, 4)")]
    UnsupportedDimension(usize),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid isometry: {0}")]
    InvalidIsometry(String),

    #[error("invalid tangent vector: {0}")]
    InvalidTangent(String),

    #[error("degenerate direction: target coincides with base point")]
    DegenerateDirection,

    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),

    #[error("invalid face: {0}")]
    InvalidFace(String),

    #[error("face has no interior base point (single ideal vertex)")]
    NoBasepoint,

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("star of face {face} does not close up: {reason}")]
    NonManifold { face: usize, reason: String },

    #[error("link of face {0} is not a sphere")]
    NonSphereLink(usize),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("generator index {index} out of range (have {count} generators)")]
    GeneratorOutOfRange { index: i32, count: usize },

    #[error("equivariance violation: {0}")]
    EquivarianceViolation(String),

    #[error("degree computation failed: {0}")]
    Degree(String),

    #[error("invalid covering: {0}")]
    InvalidCovering(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
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
