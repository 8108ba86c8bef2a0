use thiserror::Error;

use crate::bdd::VarLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("level {0} is already occupied by another variable")]
    LevelCollision(u64),

    #[error("unknown variable {0:?}")]
    UnknownVar(VarLabel),

    #[error("no weight registered for variable {0:?}")]
    MissingWeight(VarLabel),

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("zero evidence: the observations are contradictory (wmc(evidence) = 0)")]
    ZeroEvidence,

    #[error("operands belong to different inference contexts")]
    ContextMismatch,

    #[error("format mismatch: {0} vs {1}")]
    FormatMismatch(String, String),

    #[error("invalid fixed-point format: {0}")]
    InvalidFormat(String),

    #[error("{value} is not representable: {reason}")]
    Unrepresentable { value: f64, reason: String },

    #[error("fixed-point overflow with nonzero probability")]
    Overflow,

    #[error("range overflow: {0}")]
    RangeOverflow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mixture weights must lie in [0, 1] and sum to 1 (sum = {0})")]
    WeightSum(f64),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("resource guard exceeded: {0}")]
    ResourceLimit(String),

    #[error("{0}")]
    Program(#[from] crate::lang::Diagnostic),
}
