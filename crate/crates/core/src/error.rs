use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("axis vector is not a unit vector (|a| = {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("levels {labels:?} cannot be separated at x = {x}; perturb x away from the crossing")]
    InseparableLevels { x: f64, labels: Vec<usize> },

    #[error("subspace {labels:?} is not isolated at (θ, φ) = ({theta:.6}, {phi:.6}): gap {gap:.3e}")]
    SubspaceNotIsolated {
        labels: Vec<usize>,
        theta: f64,
        phi: f64,
        gap: f64,
    },

    #[error("Chern number {value:.6} deviates from an integer by {deviation:.3e}; refine the mesh")]
    NotQuantized { value: f64, deviation: f64 },

    #[error("singular overlap on a mesh link (|det| = {det:.3e}) near (θ, φ) = ({theta:.6}, {phi:.6}); refine the mesh")]
    SingularOverlap { det: f64, theta: f64, phi: f64 },

    #[error("loop is not closed")]
    OpenLoop,

    #[error("vectors are linearly dependent at index {index}")]
    LinearlyDependent { index: usize },

    #[error("θ = {theta} is too close to a pole for the closed-form basis")]
    PoleSingularity { theta: f64 },

    #[error("level tracking failed on x ∈ [{x_lo}, {x_hi}]")]
    TrackingFailed { x_lo: f64, x_hi: f64 },

    #[error("norm drift {drift:.3e} at step {step}")]
    NormDrift { step: usize, drift: f64 },

    #[error("adiabatic leakage: fidelity {fidelity:.6} at t = {time}")]
    Leakage { time: f64, fidelity: f64 },

    #[error("x ramp [{x_start}, {x_end}] does not contain the minimum-gap point {x_gap}")]
    RampMissesCrossing { x_start: f64, x_end: f64, x_gap: f64 },

    #[error("unsupported mesh: {0}")]
    UnsupportedMesh(String),
}
