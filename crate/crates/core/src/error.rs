use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid language: {0}")]
    InvalidLanguage(String),

    #[error("dimension mismatch: ({}x{}) vs ({}x{})", .left.0, .left.1, .right.0, .right.1)]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),

    #[error("language is already aligned")]
    AlreadyAligned,

    #[error("state space of {states} states exceeds the enumeration cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: u64 },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("transition kernel is reducible; no unique stationary distribution")]
    Reducible,

    #[error("resistance graph admits no spanning in-tree toward any root")]
    Disconnected,

    #[error("state left the simplex at step {step} (sum {sum}, min {min})")]
    LeftSimplex { step: usize, sum: f64, min: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
