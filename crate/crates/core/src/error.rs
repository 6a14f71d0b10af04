use thiserror::Error;

/// Errors produced by the planning library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no such object: {0}")]
    NoSuchObject(u32),
    #[error("action out of bounds")]
    ActionOutOfBounds,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid workspace: {0}")]
    InvalidWorkspace(String),
    #[error("degenerate offset")]
    DegenerateOffset,
    #[error("invalid template {id}: {reason}")]
    InvalidTemplate { id: String, reason: String },
    #[error("incomplete binding: slot {0} unbound")]
    IncompleteBinding(usize),
    #[error("template infeasible in workspace: {0}")]
    TemplateInfeasible(String),
    #[error("scatter failed")]
    ScatterFailed,
    #[error("malformed trajectory: {0}")]
    MalformedTrajectory(String),
    #[error("cannot split: {0}")]
    CannotSplit(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown loss tag: {0}")]
    UnknownLoss(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("divergence at step {step}")]
    Divergence { step: usize },
    #[error("no objects")]
    NoObjects,
    #[error("degenerate sweep: {0}")]
    DegenerateSweep(String),
    #[error("no feasible action")]
    NoFeasibleAction,
    #[error("leaf node")]
    LeafNode,
    #[error("stuck: no feasible action at root")]
    Stuck,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("degenerate point set")]
    DegeneratePointSet,
    #[error("non-elliptic fit")]
    NonEllipticFit,
    #[error("empty benchmark")]
    EmptyBenchmark,
    #[error("missing templates for environment {0}")]
    MissingEnvironment(String),
    #[error("malformed event at index {index}: {reason}")]
    MalformedEvent { index: usize, reason: String },
    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
