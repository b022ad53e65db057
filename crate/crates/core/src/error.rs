use thiserror::Error;

use crate::lattice::RegionId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid region {id}: {reason}")]
    InvalidRegion { id: RegionId, reason: String },

    #[error("region {id} is too small for {what}")]
    RegionTooSmall { id: RegionId, what: String },

    #[error("unknown region id {0}")]
    UnknownRegion(RegionId),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance is not positive semidefinite ({0})")]
    NotPositiveSemidefinite(String),

    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("series too short: need at least 2 samples, got {0}")]
    SeriesTooShort(usize),

    #[error("degenerate series (zero sample variance)")]
    DegenerateSeries,

    #[error("undefined difference-correlation (non-positive s-hat squared)")]
    UndefinedDifferenceCorrelation,

    #[error("all {draws} draws discarded for method {method}")]
    AllDrawsDiscarded { method: String, draws: usize },

    #[error("dataset format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
