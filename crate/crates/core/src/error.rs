//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero vector where a state was expected")]
    ZeroVector,

    #[error("vector is entangled (second Schmidt coefficient {second_singular:.3e})")]
    EntangledVector { second_singular: f64 },

    #[error("states {i} ({label_i}) and {j} ({label_j}) are not orthogonal (|<i|j>| = {residual:.3e})")]
    NotOrthogonal {
        i: usize,
        j: usize,
        label_i: String,
        label_j: String,
        residual: f64,
    },

    #[error("states {i} ({label_i}) and {j} ({label_j}) are equal up to phase")]
    DuplicateState {
        i: usize,
        j: usize,
        label_i: String,
        label_j: String,
    },

    #[error("label {0:?} is used more than once")]
    DuplicateLabel(String),

    #[error("unknown state label {0:?}")]
    UnknownLabel(String),

    #[error("invalid tolerance {0}: must be finite, nonnegative and below 1e-3")]
    InvalidTolerance(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("complement of the set is not a product state (second Schmidt coefficient {second_singular:.3e})")]
    ComplementNotProduct { second_singular: f64 },

    #[error("expected a one-dimensional orthogonal complement, found dimension {found}")]
    NullspaceDimension { found: usize },

    #[error("{what}: size {size} exceeds the limit of {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("the set is reducible")]
    NotIrreducible,

    #[error("construction step {step} failed: {detail}")]
    StructureViolation { step: u8, detail: String },

    #[error("invalid rectangular representation: {0}")]
    InvalidRepresentation(String),

    #[error("state {0:?} is the center cell; removing it leaves an indistinguishable set")]
    RemovedIsCenter(String),

    #[error("incomplete measurement: {0}")]
    IncompleteMeasurement(String),

    #[error("generated protocol failed verification: {0}")]
    UnreliableProtocol(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ComplementNotProduct { .. }
            | Error::NullspaceDimension { .. }
            | Error::StructureViolation { .. }
            | Error::UnreliableProtocol(_)
            | Error::Inconsistency(_) => 2,
            Error::SizeLimit { .. } => 3,
            _ => 1,
        }
    }
}
