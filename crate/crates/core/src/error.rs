//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero vector not allowed here")]
    ZeroVector,

    #[error("zero operator not allowed here")]
    ZeroOperator,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The form fails `a(x,x) >= c |x|^2` for every positive `c`.
    #[error("form is not coercive (estimated constant {constant:.6e} <= 0)")]
    NotCoercive { constant: f64 },

    #[error("operator is not positive (<Tx,x> = {value:.6e} at a witness)")]
    NotPositive { value: f64 },

    #[error("matrix is not symmetric (max |a_ij - a_ji| = {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("reduced system B^T A B is singular on the subspace")]
    SingularSystem,

    #[error("matrix is not invertible")]
    SingularMap,

    #[error("unsupported projection: {0}")]
    UnsupportedProjection(String),

    #[error(
        "solver did not converge in {max_iter} iterations (best residual {residual:.3e})"
    )]
    NonConvergence {
        max_iter: usize,
        residual: f64,
        best: Box<crate::vi::ViSolution>,
    },

    #[error(
        "uniqueness certificate failed: independent starts ended {gap:.3e} apart (allowed {allowed:.3e})"
    )]
    UniquenessCertificate { gap: f64, allowed: f64 },

    #[error("no witness found within budget (best ratio {best_ratio:.6e}, target {target:.6e})")]
    NoWitness { best_ratio: f64, target: f64 },

    #[error("no orthogonal pairs found after {attempts} attempts")]
    NoOrthogonalPairs { attempts: usize },

    #[error("relation is not homogeneous; boundedness constant is undefined")]
    NotHomogeneous,

    #[error("resolvent denominator is degenerate")]
    DegenerateResolve,

    #[error("grid resolution too coarse: n = {n} but s^(-alpha) = {required:.1}")]
    ResolutionTooCoarse { n: usize, required: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
