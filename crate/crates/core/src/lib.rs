//! Numerical experiments on the minimal elastic energy of maps between small
//! geodesic balls of Riemannian manifolds with different curvature.
//!
//! The minimal energy of maps `B_h(p) → M̃` scales like `h⁴`, with a prefactor
//! given by the minimum over rotations `Q` of a quadratic functional driven by
//! the curvature difference `R(p) − R̃^Q`. The crate computes both sides:
//!
//! * [`limit_solver`] assembles and minimizes the quadratic limit functional
//!   with a polynomial Galerkin basis and searches over SO(n);
//! * [`elastic_fem`] discretizes and minimizes the nonlinear elastic energy on
//!   a P1 mesh of the unit ball and fits the `h⁴` law;
//! * [`tensor_core`] and [`space_forms`] supply the algebra and geometry;
//! * [`cli_runner`] drives experiments from JSON configs.

pub mod cli_runner;
pub mod elastic_fem;
pub mod limit_solver;
pub mod regression;
pub mod space_forms;
pub mod tensor_core;
