//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by grid construction, operator assembly and the
/// reconstruction pipelines. Variants carry enough context to render a
/// useful message; numeric payloads are stored as `f64` regardless of the
/// working scalar.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bounds: left endpoint {a} must be below right endpoint {b}")]
    InvalidBounds { a: f64, b: f64 },

    #[error("invalid node count {n}: a grid needs at least 2 nodes")]
    InvalidCount { n: usize },

    #[error("non-finite value {value} sampled at x = {x}")]
    NonFiniteValue { x: f64, value: f64 },

    #[error("x = {x} outside the grid [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("reference function has zero norm")]
    ZeroReference,

    #[error("unsupported dimension n = {n}: only n = 1 is discretized")]
    UnsupportedDimension { n: u32 },

    #[error("unsupported order: 2s = {two_s} must be below n = {n} for the Riesz potential")]
    UnsupportedOrder { two_s: f64, n: u32 },

    #[error("sphere inversion undefined at the origin")]
    OriginUndefined,

    #[error("unmasked node x = {x} inverts to {inverted}, outside the source grid [{lo}, {hi}]")]
    InversionOutOfRange {
        x: f64,
        inverted: f64,
        lo: f64,
        hi: f64,
    },

    #[error("exclusion radius {given} below the inversion limit {required}")]
    ExclusionTooSmall { given: f64, required: f64 },

    #[error("grid mismatch: {detail}")]
    GridMismatch { detail: String },

    #[error("extension residual {max_abs} exceeds 1e-10 inside the data window")]
    ResidualInside { max_abs: f64 },

    #[error("point x = {x} violates the {side} domain of the ball of radius {r}")]
    DomainViolation { x: f64, r: f64, side: &'static str },

    #[error("Green function undefined at coincident points x = z = {x}")]
    CoincidentPoints { x: f64 },

    #[error("grid overlap: node {x} lies on the wrong side of the ball of radius {r}")]
    GridOverlap { x: f64, r: f64 },

    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },

    #[error("no probe node satisfies the mollifier support condition")]
    MaskStarvation,

    #[error("convolution support would overflow the grid by {overflow} nodes")]
    SupportOverflow { overflow: usize },

    #[error("every Fourier mode of the mollifier fell below the deconvolution floor")]
    AllFloor,

    #[error("|u| stayed at or below the floor {floor} at every node")]
    AllMasked { floor: f64 },

    #[error("need at least 3 time slices, got {got}")]
    InsufficientSlices { got: usize },

    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
