use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("input length {len} is not a multiple of {multiple}")]
    LengthNotMultiple { len: usize, multiple: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("code is catastrophic: a nonzero input cycle produces zero output weight")]
    Catastrophic,
    #[error("path-length cap {len_cap} too short: paths with weight <= {d_max} still open")]
    LenCapInsufficient { len_cap: usize, d_max: u32 },
    #[error("path counts overflow u64 below weight {d_max}")]
    CountOverflow { d_max: u32 },
    #[error("invalid puncturing matrix: {0}")]
    InvalidPuncturing(String),
    #[error("family is not rate-compatible: {0}")]
    NotRateCompatible(String),
    #[error("equivalent code does not reproduce the punctured mother output: {0}")]
    EquivalenceFailed(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite channel entry")]
    NonFinite,
    #[error("channel is rank deficient; zero-forcing nulling undefined")]
    RankDeficient,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature did not converge: achieved error {achieved:.3e} > tolerance {tolerance:.3e}")]
    QuadratureDiverged { achieved: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
