//! Error types shared across the crate.
//!
//! The split mirrors the module boundaries: geometry oracles, the capacity
//! solver, characteristic reconstruction, billiard dynamics, and the
//! experiment harness each fail in their own ways, and callers usually want
//! to react differently (recenter a body, resample a start, abort a trace).

use thiserror::Error;

/// Failures of the convex-body oracles.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("dimension mismatch: body has dimension {body}, argument has {arg}")]
    DimensionMismatch { body: usize, arg: usize },

    #[error("direction vector is zero; support gradients need a nonzero direction")]
    ZeroDirection,

    #[error("origin is not interior to the body (gauge undefined); recenter first")]
    OriginNotInterior,

    #[error("operation `{op}` is not available for body variant `{variant}`")]
    Unsupported { op: &'static str, variant: &'static str },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("iterative oracle did not converge: {0}")]
    NoConvergence(String),
}

/// Failures of the dual-action minimizer.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("domain dimension {0} is not even; the symplectic form needs paired coordinates")]
    OddDimension(usize),

    #[error("could not draw a start with positive symplectic action after {0} attempts")]
    NoPositiveActionStart(usize),

    #[error("geometry oracle failed inside the solver: {0}")]
    Geometry(#[from] GeometryError),
}

/// Failures when turning loops into closed characteristics and back.
#[derive(Debug, Error)]
pub enum CharacteristicError {
    #[error("multiplier lambda must be positive, got {0}")]
    NonPositiveLambda(f64),

    #[error(
        "reconstructed curve strays from the boundary: max |gauge - 1| = {max_dev:.3e} \
         exceeds the cap {cap:.1e}"
    )]
    BoundaryDeviation { max_dev: f64, cap: f64 },

    #[error("normalization d must be positive, got {0}")]
    NonPositiveSpeed(f64),

    #[error("sample grid too small: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("segment structure not recognized: {0}")]
    SegmentStructure(String),

    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Failures of the billiard flow and orbit search.
#[derive(Debug, Error)]
pub enum BilliardError {
    #[error("state is off the boundary: gauge of {which} is {gauge:.6} (want 1)")]
    OffBoundary { which: &'static str, gauge: f64 },

    #[error(
        "gliding configuration: <grad g_K(q), grad g_T(p)> = {dot:.3e} is inside the \
         tangency band; the forward step is not defined"
    )]
    GlidingConfiguration { dot: f64 },

    #[error(
        "direction points outward: <grad g_K(q), -grad g_T(p)> = {dot:.3e} > 0; \
         the state does not generate an inward chord"
    )]
    OutwardDirection { dot: f64 },

    #[error("ray-boundary intersection failed: {0}")]
    RayIntersection(String),

    #[error("degenerate orbit: consecutive bounce points collapsed (separation {0:.3e})")]
    DegenerateCollapse(f64),

    #[error("a closed orbit needs at least 2 bounces, got {0}")]
    BadBounceCount(usize),

    #[error("orbit search failed: {0}")]
    SearchFailed(String),

    #[error("trace aborted at step {step}: {source}")]
    TraceAborted { step: usize, source: Box<BilliardError> },

    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Failures of the verification harness.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),

    #[error("catalog error: {0}")]
    Catalog(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error(transparent)]
    Solver(#[from] SolverError),

    #[error(transparent)]
    Characteristic(#[from] CharacteristicError),

    #[error(transparent)]
    Billiard(#[from] BilliardError),
}
