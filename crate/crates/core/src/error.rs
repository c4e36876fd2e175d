use thiserror::Error;

use crate::hilbert::Arm;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unnormalized factor (norm² = {norm_sqr})")]
    UnnormalizedFactor { norm_sqr: f64 },

    #[error("OAM support overflow: |ℓ| = {l} exceeds cap {cap}")]
    OamOverflow { l: i32, cap: i32 },

    #[error("non-finite amplitude produced")]
    NonFinite,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("empty subsystem selector")]
    EmptySelector,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("density matrices are expressed in different bases")]
    BasisMismatch,

    #[error("unphysical q-plate charge q = {q} (2q must be an integer)")]
    UnphysicalCharge { q: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("null outcome: {element} on arm {arm} (element #{index}) extinguished the state")]
    Extinguished {
        arm: Arm,
        index: usize,
        element: &'static str,
    },

    #[error("null outcome at {stage}")]
    NullOutcome { stage: &'static str },

    #[error("no signal: series is identically zero")]
    NoSignal,

    #[error("rank-deficient fit design: {0}")]
    RankDeficient(String),

    #[error("undersampled grid: {grid_n} points, need at least {required}")]
    Undersampled { grid_n: usize, required: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
