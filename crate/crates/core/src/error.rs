use thiserror::Error;

/// Errors raised by the aggregation engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FgmError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense Bernoulli table requested for d = {0}; dense tables are limited to d <= 20, use a structured scheme instead")]
    DenseTooLarge(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inadmissible FGM parameters: the constraint 1 + sum(theta * eps) >= 0 fails at eps = {eps:?} (value {value:.3e})")]
    Inadmissible { eps: Vec<i8>, value: f64 },

    #[error("too many coordinate subsets ({count}); limit is {limit}")]
    SubsetOverflow { count: u128, limit: u128 },

    #[error("moment of order {order} does not exist: {reason}")]
    MomentNotFinite { order: u32, reason: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("truncation failed: tail mass {tail:.3e} remains at length cap {cap}")]
    Truncation { tail: f64, cap: usize },

    #[error("transform residue too large: {0:.3e}")]
    ImaginaryResidue(f64),

    #[error("transform length {needed} exceeds cap {cap}")]
    TransformTooLong { needed: usize, cap: usize },

    #[error("level kappa = {0} must lie in (0, 1)")]
    InvalidLevel(f64),

    #[error("composition count {count} exceeds cap {cap}")]
    CompositionOverflow { count: u128, cap: u128 },

    #[error("density f_S({s}) = {density:.3e} is too small to condition on")]
    NegligibleDensity { s: f64, density: f64 },

    #[error("empty sample batch")]
    EmptyBatch,
}

impl FgmError {
    /// True for failures caused by numerical limits rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            FgmError::Truncation { .. }
                | FgmError::ImaginaryResidue(_)
                | FgmError::TransformTooLong { .. }
                | FgmError::CompositionOverflow { .. }
                | FgmError::NegligibleDensity { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, FgmError>;
