use thiserror::Error;

use crate::linalg::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown map id `{0}`")]
    UnknownMap(String),

    #[error("map {map} requires parameter `{param}`")]
    MissingParameter { map: String, param: String },

    #[error("map {map} has no parameter `{param}`")]
    UnknownParameter { map: String, param: String },

    #[error("invalid parameter `{param}`: {reason}")]
    InvalidParameter { param: String, reason: String },

    #[error("non-finite coordinates in {0:?}")]
    NonFinitePoint(Point),

    #[error("image of {0:?} overflowed to non-finite values")]
    Overflow(Point),

    #[error("dimension mismatch: map is {expected}D, got {got}D input")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("orbit diverged at step {step}")]
    Diverged { step: usize },

    #[error("orbit converged to the fixed point at step {step} before the requested length")]
    Converged { step: usize },

    #[error("segment image escaped radius {radius} at depth {depth}")]
    SegmentEscaped { depth: usize, radius: f64 },

    #[error("segment count exceeded {limit} at depth {depth}")]
    TooManySegments { depth: usize, limit: usize },

    #[error("{0}")]
    NoInvariantInterval(String),

    #[error("not a circle homeomorphism: {0}")]
    NotHomeomorphism(String),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("segment [{0}, {1}] contains the fixed point")]
    SegmentContainsOrigin(f64, f64),

    #[error("first-return map requires a 2D homogeneous map")]
    ReturnMapUnsupported,

    #[error("probe orbit from abscissa {abscissa} {what} before returning to the ray")]
    ProbeEscaped { abscissa: f64, what: &'static str },

    #[error("empty sample")]
    EmptySample,
}

pub type Result<T> = std::result::Result<T, Error>;
