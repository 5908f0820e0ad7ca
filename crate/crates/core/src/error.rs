use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("batch must contain at least one coordinate")]
    EmptyBatch,

    #[error("length mismatch for {field}: expected {expected}, got {actual}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("sigma[{index}] must be positive and finite, got {value}")]
    InvalidSigma { index: usize, value: f64 },

    #[error("{field}[{index}] is not finite")]
    NonFinite { field: &'static str, index: usize },

    #[error("breakpoints must be strictly increasing and finite")]
    UnsortedBreakpoints,

    #[error("{groups} groups need {groups} thresholds, got {actual}")]
    ThresholdCount { groups: usize, actual: usize },

    #[error("threshold for group {group} is outside [0, t_n] or not finite: {value}")]
    InvalidThreshold { group: usize, value: f64 },

    #[error("auxiliary sequence is constant and carries no ordering")]
    DegenerateAux,

    #[error("no breakpoint candidate yields {k} non-empty groups")]
    NoFeasibleCandidate { k: usize },

    #[error("cannot fit a threshold to an empty group")]
    EmptyGroup,

    #[error("batch is missing `{0}`")]
    Missing(&'static str),

    #[error("invalid {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },

    #[error("{0}")]
    Domain(&'static str),
}
