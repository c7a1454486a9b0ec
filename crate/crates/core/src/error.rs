use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument outside the function domain: {0}")]
    DomainError(String),
    #[error("covariance is not symmetric positive semi-definite: {0}")]
    NotPsd(String),
    #[error("covariance is degenerate after regularization")]
    DegenerateCovariance,
    #[error("at least two augmentations are required, got {0}")]
    InsufficientAugmentations(usize),
    #[error("gaussian mixture has no components")]
    EmptyMixture,
    #[error("mixture weights are zero or invalid")]
    DegenerateWeights,
    #[error("label {0} does not occur in the label map")]
    UnknownLabel(i32),
    #[error("no labeled cells in the provided masks")]
    EmptyGroundTruth,
    #[error("assignment problem is infeasible")]
    Infeasible,
    #[error("cost matrix is malformed: {0}")]
    InvalidMatrix(String),
    #[error("expected frame {expected}, got {got}")]
    FrameOrder { expected: usize, got: usize },
    #[error("bad tensor header: {0}")]
    BadTensorHeader(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid lineage: {0}")]
    InvalidLineage(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
