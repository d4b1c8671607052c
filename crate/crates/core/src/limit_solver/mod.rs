//! Galerkin solver for the limit quadratic functional and the outer
//! minimization over rotations.

mod basis;
mod functional;
mod nelder_mead;
mod quadrature;
mod rotation_search;

use thiserror::Error;

use crate::tensor_core::TensorError;

pub use basis::{PolyVectorBasis, MAX_DEGREE};
pub use functional::{
    assemble_limit_functional, kernel_dimension, required_order, solve_m, sym_gradient,
    LimitSolution, LimitSolver, QuadraticProblem, INDEFINITE_THRESHOLD, KERNEL_THRESHOLD,
};
pub use nelder_mead::{nelder_mead, NelderMeadResult};
pub use quadrature::{ball_quadrature, gauss_legendre, BallQuadrature, MAX_BALL_ORDER};
pub use rotation_search::{m_of_q, minimize_over_rotations, QSearchConfig, QSearchResult};

/// Default polynomial degree of the Galerkin space.
pub const DEFAULT_DEGREE: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("unsupported order or degree {0}")]
    UnsupportedOrder(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("gram matrix is indefinite (eigenvalue {0:e})")]
    IndefiniteGram(f64),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
