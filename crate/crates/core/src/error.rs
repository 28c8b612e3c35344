use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite integrand value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("no admissible ball inside ({lo}, {hi})")]
    EmptyScan { lo: f64, hi: f64 },

    #[error("unknown catalog entry `{0}`")]
    UnknownExample(String),

    #[error("mollifier radius {radius} is too large: {reason}")]
    MollifierTooWide { radius: f64, reason: String },

    #[error("test function does not vanish on the boundary (|h| = {value})")]
    NonzeroBoundary { value: f64 },

    #[error("unsupported potential for this operation: {0}")]
    UnsupportedPotential(String),

    #[error("potential must be nonnegative (found {value} at x = {x})")]
    NegativePotential { x: f64, value: f64 },

    #[error("stiffness matrix is singular or not positive definite")]
    Singular,

    #[error("eigensolver did not converge after {iterations} iterations (best estimate {estimate})")]
    EigenNonConvergence { iterations: usize, estimate: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("coercivity lost: measured upper form bound {lambda} is not below 1")]
    CoercivityLost { lambda: f64 },

    #[error("discrete maximum principle violated: min nodal value {min}; refine the mesh")]
    NegativeSolution { min: f64 },

    #[error("nonpositive value {value} at node {node}")]
    Nonpositive { node: usize, value: f64 },

    #[error("exhaustion did not converge; level drifts {drifts:?}")]
    NonConvergence { drifts: Vec<f64> },

    #[error("Neumann series diverges (upper form bound {lambda}); partial sums {partial_sums:?}")]
    SeriesDivergence { lambda: f64, partial_sums: Vec<f64> },

    #[error("gauge methods disagree by {difference} (tolerance {tolerance})")]
    MethodDisagreement { difference: f64, tolerance: f64 },

    #[error("finite-difference stencil at {point:?} leaves the evaluable region")]
    StencilOutOfDomain { point: [f64; 3] },
}
