use thiserror::Error;

use crate::geometry::Point2;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lemma hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("sampler exhausted after {0} rejections")]
    SamplerExhausted(u64),
    #[error("configuration of {requested} disks exceeds cap of {cap}")]
    SizeOverflow { requested: u64, cap: u64 },
    #[error("placement exhausted after {0} consecutive rejections")]
    PlacementExhausted(u64),
    #[error("disks {i} and {j} overlap: center distance {distance}")]
    OverlapDetected { i: usize, j: usize, distance: f64 },
    #[error("invalid vertex id {0}")]
    InvalidVertex(usize),
    #[error("vertex {vertex} has degree {degree} > 6")]
    DegreeBoundViolated { vertex: usize, degree: usize },
    #[error("vertex {0} has two incident edges with the same direction")]
    DegenerateAngle(usize),
    #[error("face trace did not close within {0} steps")]
    TraceNonTermination(usize),
    #[error("point ({}, {}) is not on the face boundary", .0.x, .0.y)]
    NotOnBoundary(Point2),
    #[error("face {face}: {what} violated at ({}, {}) / ({}, {})", .x.x, .x.y, .y.x, .y.y)]
    FaceMetricViolation {
        face: usize,
        what: String,
        x: Point2,
        y: Point2,
    },
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("field has no value at vertex {0}")]
    MissingValue(usize),
    #[error("dirichlet problem has empty boundary")]
    EmptyBoundary,
    #[error("domain and its boundary are not connected")]
    NotConnected,
    #[error("harmonic measure entry underflow at omega vertex {vertex}, atom {atom}")]
    UnderflowGuard { vertex: usize, atom: usize },
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("json error: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
