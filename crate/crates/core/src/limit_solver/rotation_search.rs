use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::tensor_core::{CurvatureTensor, Rotation};

use super::{nelder_mead, LimitError, LimitSolution, LimitSolver};

/// Settings of the global-then-local search over SO(n).
#[derive(Clone, Debug, PartialEq)]
pub struct QSearchConfig {
    /// Angle-grid points (n = 2) or random coarse rotations (n = 3).
    pub grid_size: usize,
    /// Stop local refinement once the simplex values differ by less than this.
    pub tol: f64,
    /// Number of best coarse candidates refined locally.
    pub seeds: usize,
    /// Seed of the coarse sample in n = 3.
    pub seed: u64,
}

impl Default for QSearchConfig {
    fn default() -> Self {
        Self {
            grid_size: 64,
            tol: 1e-10,
            seeds: 3,
            seed: 0,
        }
    }
}

impl QSearchConfig {
    pub fn min_grid_size(n: usize) -> usize {
        if n == 2 {
            8
        } else {
            64
        }
    }
}

#[derive(Clone, Debug)]
pub struct QSearchResult {
    pub q_star: Rotation,
    pub m_star: f64,
    /// Limit minimizer at `q_star`.
    pub solution: LimitSolution,
    /// Best value on the coarse sample, before refinement.
    pub coarse_min: f64,
    pub evaluations: usize,
}

/// `m^Q` for the pair `(R, R̃)`: the minimum of the functional sourced by
/// `R − R̃^Q`.
pub fn m_of_q(
    solver: &LimitSolver,
    r: &CurvatureTensor,
    rt: &CurvatureTensor,
    q: &Rotation,
) -> Result<LimitSolution, LimitError> {
    let diff = r.try_sub(&rt.pullback(q)?)?;
    solver.solve(&diff)
}

fn axial_dim(n: usize) -> usize {
    if n == 2 {
        1
    } else {
        3
    }
}

fn random_axial(rng: &mut ChaCha8Rng) -> [f64; 3] {
    // uniform in the ball of radius π
    loop {
        let w = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let r2: f64 = w.iter().map(|v| v * v).sum();
        if r2 <= 1.0 && r2 > 0.0 {
            return [PI * w[0], PI * w[1], PI * w[2]];
        }
    }
}

/// Heuristic global search for `min_Q m^Q`: coarse sample of SO(n), then
/// Nelder–Mead in the chart `Q₀·exp(S(ω))`, `|ω| ≤ π`, from the `seeds` best
/// coarse points.
pub fn minimize_over_rotations(
    solver: &LimitSolver,
    r: &CurvatureTensor,
    rt: &CurvatureTensor,
    cfg: &QSearchConfig,
) -> Result<QSearchResult, LimitError> {
    let n = solver.basis().n();
    if r.n() != n || rt.n() != n {
        return Err(LimitError::DimensionMismatch {
            left: n,
            right: if r.n() != n { r.n() } else { rt.n() },
        });
    }
    let grid_size = cfg.grid_size.max(1);
    let coarse: Vec<Rotation> = if n == 2 {
        (0..grid_size)
            .map(|k| Rotation::from_angle(2.0 * PI * k as f64 / grid_size as f64))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut v = vec![Rotation::identity(3)];
        v.extend((1..grid_size).map(|_| Rotation::exp_skew(3, &random_axial(&mut rng))));
        v
    };
    let values: Vec<f64> = coarse
        .par_iter()
        .map(|q| m_of_q(solver, r, rt, q).map(|s| s.m))
        .collect::<Result<_, _>>()?;
    let mut evaluations = values.len();
    let mut ranked: Vec<usize> = (0..values.len()).collect();
    ranked.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let coarse_min = values[ranked[0]];

    let dim = axial_dim(n);
    let step = if n == 2 {
        2.0 * PI / grid_size as f64
    } else {
        0.5
    };
    let mut best_q = coarse[ranked[0]];
    let mut best_m = coarse_min;
    for &start in ranked.iter().take(cfg.seeds.max(1)) {
        let q0 = coarse[start];
        let objective = |w: &[f64]| -> f64 {
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > PI {
                return f64::INFINITY;
            }
            let q = q0.compose(&Rotation::exp_skew(n, w));
            m_of_q(solver, r, rt, &q).map(|s| s.m).unwrap_or(f64::INFINITY)
        };
        let res = nelder_mead(objective, &vec![0.0; dim], step, cfg.tol, 1e-6, 2000);
        evaluations += res.evaluations;
        if res.value < best_m {
            best_m = res.value;
            best_q = q0.compose(&Rotation::exp_skew(n, &res.x));
        }
    }
    let solution = m_of_q(solver, r, rt, &best_q)?;
    evaluations += 1;
    Ok(QSearchResult {
        q_star: best_q,
        m_star: solution.m,
        solution,
        coarse_min,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_solver::PolyVectorBasis;

    #[test]
    fn equal_tensors_give_zero() {
        let s = LimitSolver::new(PolyVectorBasis::new(2, 3).unwrap()).unwrap();
        let k = CurvatureTensor::constant_curvature(1.0, 2).unwrap();
        let res = minimize_over_rotations(&s, &k, &k, &QSearchConfig::default()).unwrap();
        assert!(res.m_star < 1e-14);
    }

    #[test]
    fn never_worse_than_coarse() {
        let s = LimitSolver::new(PolyVectorBasis::new(3, 3).unwrap()).unwrap();
        let r = CurvatureTensor::from_shape_operator(&crate::tensor_core::Matrix::diag(&[1.0, 2.0, -1.0]));
        let rt = CurvatureTensor::from_shape_operator(&crate::tensor_core::Matrix::diag(&[0.5, -1.0, 3.0]));
        let cfg = QSearchConfig {
            grid_size: 64,
            ..Default::default()
        };
        let res = minimize_over_rotations(&s, &r, &rt, &cfg).unwrap();
        assert!(res.m_star <= res.coarse_min + 1e-15);
    }
}
