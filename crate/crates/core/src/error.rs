use thiserror::Error;

/// Errors raised while constructing channels or running the analyses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("noise variance `{name}` must be finite and strictly positive, got {value}")]
    NonPositiveVariance { name: &'static str, value: f64 },

    #[error("receiver 1 must be the stronger receiver: sigma1_sq = {sigma1_sq} > sigma2_sq = {sigma2_sq}")]
    StrongerUserViolation { sigma1_sq: f64, sigma2_sq: f64 },

    #[error("correlation coefficient must lie in [-1, 1], got {0}")]
    CorrelationOutOfRange(f64),

    #[error("power must be finite and non-negative, got {0}")]
    NegativePower(f64),

    #[error("feedback noise variance must be finite and non-negative, got {0}")]
    NegativeFeedbackVariance(f64),

    #[error("channel is outside the decomposable class: {0}")]
    OutsideClass(String),

    #[error("theta must lie in [0, 1], got {0}")]
    ThetaOutOfRange(f64),

    #[error("index {index} out of range for a {dim}x{dim} covariance")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("index {0} appears in more than one index set")]
    OverlappingSets(usize),

    #[error("duplicate index {0} in index set")]
    DuplicateIndex(usize),

    #[error("matrix is not symmetric positive semidefinite: {0}")]
    NotPsd(String),

    #[error("entropy is singular (-inf); entropy power is undefined")]
    SingularEntropy,

    #[error("horizon {0} exceeds the supported maximum of {max}", max = crate::linear::MAX_HORIZON)]
    HorizonTooLarge(usize),

    #[error("malformed scheme: {0}")]
    MalformedScheme(String),

    #[error("scheme carries no message power; cannot normalize")]
    ZeroScheme,

    #[error("feedback taps alone use power {noise_power}, above the target {target}")]
    InfeasiblePower { noise_power: f64, target: f64 },

    #[error("bad grid specification: {0}")]
    BadGridSpec(String),

    #[error("invalid search configuration: {0}")]
    BadConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
