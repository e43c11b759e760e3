use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("exponent q = {0} is below 1")]
    InvalidExponent(f64),

    #[error("density has a negative value {value} at index {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(
        "momentum support breach at t = {time}: mass {layer_mass:e} in the boundary layer \
         exceeds {threshold:e}"
    )]
    MomentumSupportBreach {
        time: f64,
        layer_mass: f64,
        threshold: f64,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("history is unusable: {0}")]
    History(String),

    #[error("radius {radius} plus elapsed time {time} exceeds half the torus period {half_period}")]
    RadiusTooLarge {
        radius: f64,
        time: f64,
        half_period: f64,
    },

    #[error("test function support leaves the domain: {0}")]
    SupportOutsideDomain(String),

    #[error("transport triple invariant violated: {0}")]
    TripleInvariant(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
