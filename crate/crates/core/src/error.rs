//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample {value} at node {index} ({coords:?})")]
    NonFiniteSample {
        index: usize,
        coords: [f64; 3],
        value: f64,
    },

    #[error("point {0:?} outside the sampling domain")]
    OutOfDomain([f64; 3]),

    #[error("field file format error: {0}")]
    FieldFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("matrix is not symmetric positive definite (eigenvalue {0})")]
    NotSpd(f64),

    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),

    #[error("integrand support of radius {radius} at {center:?} is clipped by the domain")]
    SupportClipped { center: [f64; 3], radius: f64 },

    #[error("radius {radius} below the resolution floor {floor}")]
    RadiusBelowResolution { radius: f64, floor: f64 },

    #[error("degenerate boundary mass H = {0}; field vanishes near the base point")]
    DegeneratePoint(f64),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("problem size {size} exceeds the cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("grid has no thin-plane nodes")]
    EmptyPlane,

    #[error("annulus [{inner}, {outer}] underresolved at spacing {spacing}")]
    AnnulusUnderresolved {
        inner: f64,
        outer: f64,
        spacing: f64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),
}
