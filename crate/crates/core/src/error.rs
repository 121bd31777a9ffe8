use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite sample at node {index}")]
    NonFinite { index: usize },

    #[error("expression is singular at grid node {index} (x = {position:?}); supply a truncation radius")]
    SingularSample { index: usize, position: Vec<f64> },

    #[error("failed to parse function expression: {0}")]
    Parse(String),

    #[error("empty level range: J_min = {min} > J_max = {max}")]
    EmptyLevelRange { min: i32, max: i32 },

    #[error("cube enumeration would produce {count} cubes (cap {cap})")]
    TooManyCubes { count: u128, cap: usize },

    #[error("empty candidate set: {0}")]
    EmptyCandidates(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("support not covered: {0}")]
    SupportNotCovered(String),

    #[error("zero norm: {0}")]
    ZeroNorm(String),

    #[error("truncation radius {eps} is below the grid spacing {spacing}")]
    SubGridTruncation { eps: f64, spacing: f64 },

    #[error("degenerate radius: {0}")]
    DegenerateRadius(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("no admissible evaluation points: {0}")]
    NoAdmissiblePoints(String),

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl From<std::io::Error> for LabError {
    fn from(err: std::io::Error) -> Self {
        LabError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(err: serde_json::Error) -> Self {
        LabError::Serde(err.to_string())
    }
}
