use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("grid size {0} is not a power of two >= 16")]
    BadGridSize(usize),
    #[error("poisson source has nonzero mean {0:e}")]
    NonZeroMean(f64),
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("riemann inversion requires K > 0")]
    DegenerateSoundSpeed,
    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("slope A = {slope} at alpha = {alpha} is not negative")]
    NonNegativeSlope { alpha: f64, slope: f64 },
    #[error("alpha = {0} is not below the critical rate 2/3")]
    NotSubcritical(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
}
