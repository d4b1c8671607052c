//! Small dense linear algebra, distance to the rotation group, and curvature
//! tensors with their rotation pullbacks.

mod curvature;
mod distance;
mod matrix;
mod rotation;

use thiserror::Error;

pub use curvature::{random_curvature_like, CurvatureTensor, SymmetryDefects};
pub use distance::{
    dist_general_frames, dist_to_son, grad_dist_sq, nearest_rotation, perturbed_distance_bound,
    spd_inv_sqrt, spd_sqrt, PerturbedBound, SPD_FLOOR,
};
pub use matrix::{Matrix, Svd};
pub use rotation::Rotation;

/// Tolerance for exact algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for randomized inequality checks.
pub const RANDOMIZED_TOL: f64 = 1e-10;
/// Tolerance for finite-difference gradient checks.
pub const FD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite matrix entries")]
    NonFinite,
    #[error("singular value decomposition did not converge")]
    SingularDecompositionFailure,
    #[error("nearest rotation is not unique (det < 0 with repeated smallest singular value)")]
    AmbiguousProjection,
    #[error("gradient of dist² requested at det = {0:e} <= 0")]
    NonPositiveDeterminant(f64),
    #[error("matrix is not symmetric positive definite (eigenvalue {0:e})")]
    NotSpd(f64),
    #[error("matrix is not invertible (|det| = {0:e})")]
    NotInvertible(f64),
    #[error("matrix is not a rotation (orthogonality defect {defect:e}, det {det})")]
    NotRotation { defect: f64, det: f64 },
    #[error("tensor violates curvature symmetries by {0:e}")]
    NotCurvatureLike(f64),
}
