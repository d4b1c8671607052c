use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::limit_solver::{minimize_over_rotations, LimitSolver, PolyVectorBasis, QSearchConfig};
use crate::space_forms::SpaceForm;
use crate::tensor_core::Rotation;

use super::lbfgs::{lbfgs, LbfgsSettings, StopReason};
use super::{build_ball_mesh, fit_power_law, BallMesh, recovery_map, DiscreteMap, ElasticProblem, FemError, PowerLawFit};

/// Energies below this are treated as exact isometries.
pub const EXACT_ENERGY: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Absolute gradient max-norm tolerance; `None` means `1e−9 · max(1, E₀)`.
    pub grad_tol: Option<f64>,
    /// Seeded perturbed restarts after the main run.
    pub restarts: usize,
    pub memory: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: None,
            restarts: 3,
            memory: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Exact,
    Converged,
    MaxIterations,
    LineSearchFailure,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Exact => "exact",
            RowStatus::Converged => "converged",
            RowStatus::MaxIterations => "max_iters",
            RowStatus::LineSearchFailure => "linesearch_failure",
        }
    }
}

/// Result of [`minimize_energy`].
#[derive(Clone, Debug)]
pub struct Minimized {
    pub map: DiscreteMap,
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: RowStatus,
}

/// L-BFGS descent of `E_h` from `u0`; steps leaving the chart or inverting a
/// cell are rejected by the line search. Returns the best iterate even when
/// the line search fails (flagged in `status`).
pub fn minimize_energy(
    problem: &ElasticProblem,
    u0: &DiscreteMap,
    opt: &OptimizerConfig,
) -> Result<Minimized, FemError> {
    let (e0, _) = problem.energy_and_gradient(u0)?;
    let mesh = problem.mesh().clone();
    let n = mesh.n;
    let tol = opt.grad_tol.unwrap_or(1e-9 * e0.max(1.0));
    let eval = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
        let u = DiscreteMap::from_flat(mesh.clone(), x);
        let (e, g) = problem.energy_and_gradient(&u).ok()?;
        Some((e, g.iter().flat_map(|v| v[..n].to_vec()).collect()))
    };
    let settings = LbfgsSettings {
        memory: opt.memory.max(1),
        max_iters: opt.max_iters,
        armijo: 1e-4,
        max_backtracks: 60,
    };
    let out = lbfgs(eval, u0.flatten(), tol, &settings).ok_or(FemError::LineSearchFailure)?;
    let status = if out.value < EXACT_ENERGY {
        RowStatus::Exact
    } else {
        match out.reason {
            StopReason::Converged => RowStatus::Converged,
            StopReason::MaxIterations => RowStatus::MaxIterations,
            StopReason::LineSearchFailure => RowStatus::LineSearchFailure,
        }
    };
    Ok(Minimized {
        map: DiscreteMap::from_flat(mesh, &out.x),
        energy: out.value,
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        status,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Decreasing scales.
    pub h_list: Vec<f64>,
    /// Starting mesh refinement.
    pub mesh_refinement: usize,
    /// Upper bound for the adaptive refinement.
    pub max_refinement: usize,
    /// Relative change of `E*` at the smallest `h` that stops refinement.
    pub refine_tol: f64,
    pub basis_degree: usize,
    pub q_search: QSearchConfig,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            h_list: vec![0.4, 0.28, 0.2, 0.14, 0.1],
            mesh_refinement: 2,
            max_refinement: 5,
            refine_tol: 0.01,
            basis_degree: 5,
            q_search: QSearchConfig::default(),
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScalingRow {
    pub h: f64,
    pub e_min: f64,
    pub e_over_h4: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub status: RowStatus,
    /// Energy of the recovery-map initializer.
    pub e_recovery: f64,
    /// Largest relative deviation of a restart's energy from `e_min`.
    pub restart_spread: f64,
}

#[derive(Clone, Debug)]
pub struct ScalingFitResult {
    /// Sorted by decreasing `h`.
    pub rows: Vec<ScalingRow>,
    pub refinement: usize,
    /// `(refinement, E*)` at the smallest `h` during adaptive refinement.
    pub refinement_history: Vec<(usize, f64)>,
    /// `None` when fewer than two rows carry positive energy.
    pub fit: Option<PowerLawFit>,
    pub exponent: Option<f64>,
    /// Extrapolated `E*/h⁴` at `h → 0`.
    pub prefactor: Option<f64>,
    pub mbar_reference: f64,
    pub relative_gap: Option<f64>,
    pub q_star: Rotation,
}

/// The limit minimizer and best rotation for a domain/target pair.
#[derive(Clone, Debug)]
pub struct LimitReference {
    pub basis: PolyVectorBasis,
    pub mbar: f64,
    pub q_star: Rotation,
    pub coeffs: Vec<f64>,
}

pub fn limit_reference(
    dom: &SpaceForm,
    tgt: &SpaceForm,
    degree: usize,
    search: &QSearchConfig,
) -> Result<LimitReference, FemError> {
    let basis = PolyVectorBasis::new(dom.n(), degree)?;
    let solver = LimitSolver::new(basis.clone())?;
    let res = minimize_over_rotations(&solver, dom.curvature_tensor(), tgt.curvature_tensor(), search)?;
    Ok(LimitReference {
        basis,
        mbar: res.m_star,
        q_star: res.q_star,
        coeffs: res.solution.coeffs,
    })
}

struct RowRun {
    best: Minimized,
    e_recovery: f64,
    spread: f64,
}

fn run_row(
    dom: &SpaceForm,
    tgt: &SpaceForm,
    mesh: &Arc<BallMesh>,
    h: f64,
    reference: &LimitReference,
    opt: &OptimizerConfig,
    restarts: usize,
    seed: u64,
) -> Result<RowRun, FemError> {
    let problem = ElasticProblem::new(mesh.clone(), dom, tgt, h)?;
    let flat = reference.mbar < EXACT_ENERGY;
    let start = |coeffs: &[f64]| -> Result<DiscreteMap, FemError> {
        if flat {
            Ok(DiscreteMap::identity(mesh.clone()))
        } else {
            recovery_map(&reference.basis, coeffs, reference.q_star, mesh.clone(), h, tgt)
        }
    };
    let u0 = start(&reference.coeffs)?;
    let e_recovery = problem.energy(&u0)?;
    let mut best = minimize_energy(&problem, &u0, opt)?;
    let mut energies = Vec::new();
    if best.status != RowStatus::Exact {
        let scale = reference.coeffs.iter().fold(1e-3f64, |m, c| m.max(c.abs()));
        for k in 0..restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64 + 1));
            let coeffs: Vec<f64> = reference
                .coeffs
                .iter()
                .map(|c| c + 0.1 * scale * rng.random_range(-1.0..1.0))
                .collect();
            let Ok(u) = start(&coeffs) else { continue };
            let Ok(run) = minimize_energy(&problem, &u, opt) else { continue };
            energies.push(run.energy);
            if run.energy < best.energy {
                energies.push(best.energy);
                best = run;
            }
        }
    }
    let spread = energies
        .iter()
        .map(|e| (e - best.energy).abs() / best.energy.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(RowRun {
        best,
        e_recovery,
        spread,
    })
}

/// The `h⁴` scaling study: minimize `E_h` for every `h`, warm-started from the
/// recovery map of the limit minimizer, and fit the power law.
pub fn scaling_sweep(dom: &SpaceForm, tgt: &SpaceForm, cfg: &SweepConfig) -> Result<ScalingFitResult, FemError> {
    if cfg.h_list.is_empty() || cfg.h_list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(FemError::InvalidInput("h_list must be non-empty and strictly decreasing".into()));
    }
    let n = dom.n();
    let reference = limit_reference(dom, tgt, cfg.basis_degree, &cfg.q_search)?;
    let h_min = *cfg.h_list.last().expect("non-empty");

    let mut history = Vec::new();
    let mut refinement = cfg.mesh_refinement;
    let mut prev: Option<f64> = None;
    loop {
        let mesh = Arc::new(build_ball_mesh(n, refinement)?);
        let run = run_row(dom, tgt, &mesh, h_min, &reference, &cfg.optimizer, 0, cfg.seed)?;
        let e = run.best.energy;
        history.push((refinement, e));
        let settled = e < EXACT_ENERGY || prev.is_some_and(|p| (e - p).abs() < cfg.refine_tol * e);
        if settled || refinement >= cfg.max_refinement {
            break;
        }
        prev = Some(e);
        refinement += 1;
    }

    let mesh = Arc::new(build_ball_mesh(n, refinement)?);
    let rows: Vec<ScalingRow> = cfg
        .h_list
        .par_iter()
        .enumerate()
        .map(|(i, &h)| {
            let seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1000 * i as u64);
            let run = run_row(dom, tgt, &mesh, h, &reference, &cfg.optimizer, cfg.optimizer.restarts, seed)?;
            Ok(ScalingRow {
                h,
                e_min: run.best.energy,
                e_over_h4: run.best.energy / h.powi(4),
                iterations: run.best.iterations,
                grad_norm: run.best.grad_norm,
                status: run.best.status,
                e_recovery: run.e_recovery,
                restart_spread: run.spread,
            })
        })
        .collect::<Result<_, FemError>>()?;

    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.e_min >= EXACT_ENERGY)
        .map(|r| (r.h, r.e_min))
        .collect();
    let fit = fit_power_law(&points).ok();
    let prefactor = fit.map(|f| f.extrapolated_prefactor);
    let mbar = reference.mbar;
    let relative_gap = prefactor.map(|p| {
        if mbar > 0.0 {
            (p - mbar).abs() / mbar
        } else {
            p.abs()
        }
    });
    Ok(ScalingFitResult {
        rows,
        refinement,
        refinement_history: history,
        exponent: fit.map(|f| f.exponent),
        fit,
        prefactor,
        mbar_reference: mbar,
        relative_gap,
        q_star: reference.q_star,
    })
}
