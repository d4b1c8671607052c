//! P1 discretization of the elastic energy between small geodesic balls, its
//! minimization, and the `h⁴` scaling study.

mod energy;
mod fit;
mod lbfgs;
mod mesh;
mod recovery;
mod sweep;

use thiserror::Error;

use crate::limit_solver::LimitError;
use crate::space_forms::SpaceFormError;
use crate::tensor_core::TensorError;

pub use energy::{elastic_energy, energy_gradient, DiscreteMap, ElasticProblem};
pub use fit::{fit_power_law, PowerLawFit};
pub use lbfgs::{lbfgs, LbfgsOutcome, LbfgsSettings, StopReason};
pub use mesh::{build_ball_mesh, subdivisions, BallMesh, QuadRule};
pub use recovery::{recovery_map, RecoveryMap};
pub use sweep::{
    limit_reference, minimize_energy, scaling_sweep, LimitReference, Minimized, OptimizerConfig,
    RowStatus, ScalingFitResult, ScalingRow, SweepConfig, EXACT_ENERGY,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cell {cell} is inverted (det = {det:e})")]
    InvertedCell { cell: usize, det: f64 },
    #[error("line search failed at the initial point")]
    LineSearchFailure,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error(transparent)]
    SpaceForm(#[from] SpaceFormError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}
