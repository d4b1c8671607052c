use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::elastic_fem::{scaling_sweep, RowStatus, ScalingFitResult};
use crate::limit_solver::{m_of_q, minimize_over_rotations, LimitSolver, PolyVectorBasis};
use crate::space_forms::{metric_expansion_order_with_sign, SpaceForm, SpaceFormKind};
use crate::tensor_core::{
    perturbed_distance_bound, random_curvature_like, CurvatureTensor, Matrix, Rotation, ALGEBRAIC_TOL,
    RANDOMIZED_TOL,
};

use super::{CliError, Experiment};

/// Affine-skew perturbations must leave the functional unchanged to this level.
pub const GAUGE_TOL: f64 = 1e-12;
/// Relative tolerance of `m(cA) = c² m(A)`.
pub const HOMOGENEITY_TOL: f64 = 1e-10;
/// Minimal fitted order of the metric-expansion error.
pub const MIN_EXPANSION_ORDER: f64 = 3.9;
pub const EXPANSION_RADII: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Limit functional study: `m` per degree, `m*` and `Q*`, gauge and
/// homogeneity checks.
pub fn cmd_limit(exp: &Experiment) -> Result<Value, CliError> {
    let n = exp.n;
    let degree = exp.sweep.basis_degree;
    let r = exp.domain.curvature_tensor();
    let rt = exp.target.curvature_tensor();
    let basis = PolyVectorBasis::new(n, degree).map_err(numerical)?;
    let solver = LimitSolver::new(basis.clone()).map_err(numerical)?;
    let search = minimize_over_rotations(&solver, r, rt, &exp.sweep.q_search).map_err(numerical)?;
    let q = search.q_star;

    let mut per_degree = Vec::new();
    for d in 1..=degree {
        let s = LimitSolver::new(PolyVectorBasis::new(n, d).map_err(numerical)?).map_err(numerical)?;
        let m = m_of_q(&s, r, rt, &q).map_err(numerical)?.m;
        per_degree.push(json!({"degree": d, "m": m}));
    }

    let diff = r.try_sub(&rt.pullback(&q).map_err(numerical)?).map_err(numerical)?;
    let coeffs = &search.solution.coeffs;
    let base = solver.functional_value(&diff, coeffs).map_err(numerical)?;
    let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
    let mut gauge_dev: f64 = 0.0;
    for _ in 0..5 {
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = Matrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let shift = basis.affine_skew_coefficients(&b, &w);
        let moved: Vec<f64> = coeffs.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let v = solver.functional_value(&diff, &moved).map_err(numerical)?;
        gauge_dev = gauge_dev.max((v - base).abs());
    }

    let m0 = search.m_star;
    let mut homog_err: f64 = 0.0;
    let factors = [2.0, 3.0, 10.0];
    for c in factors {
        let mc = solver.solve(&(&diff * c)).map_err(numerical)?.m;
        let err = if m0 > 0.0 {
            (mc - c * c * m0).abs() / (c * c * m0)
        } else {
            mc.abs()
        };
        homog_err = homog_err.max(err);
    }

    Ok(json!({
        "dimension": n,
        "basis_degree": degree,
        "seed": exp.seed,
        "m_per_degree": per_degree,
        "m_star": m0,
        "Q_star": q.matrix().row_major(),
        "rotation_evaluations": search.evaluations,
        "gauge_check": {"max_deviation": gauge_dev, "tolerance": GAUGE_TOL, "passed": gauge_dev <= GAUGE_TOL},
        "homogeneity_check": {
            "factors": factors,
            "max_relative_error": homog_err,
            "tolerance": HOMOGENEITY_TOL,
            "passed": homog_err <= HOMOGENEITY_TOL,
        },
    }))
}

/// Output of [`cmd_scaling`].
#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub result: ScalingFitResult,
    pub csv: String,
    pub summary: Value,
}

impl ScalingReport {
    /// True when some row ended with a failed line search.
    pub fn has_failures(&self) -> bool {
        self.result.rows.iter().any(|r| r.status == RowStatus::LineSearchFailure)
    }
}

pub const CSV_HEADER: &str = "h,E_min,E_over_h4,iters,grad_norm,status";

pub fn format_csv(result: &ScalingFitResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &result.rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{},{:.16e},{}\n",
            r.h,
            r.e_min,
            r.e_over_h4,
            r.iterations,
            r.grad_norm,
            r.status.as_str()
        ));
    }
    out
}

pub fn cmd_scaling(exp: &Experiment) -> Result<ScalingReport, CliError> {
    if exp.sweep.h_list.len() < 4 {
        return Err(CliError::Config("scaling needs at least 4 values in h_list".into()));
    }
    let result = scaling_sweep(&exp.domain, &exp.target, &exp.sweep).map_err(numerical)?;
    let csv = format_csv(&result);
    let fit = result.fit;
    let summary = json!({
        "exponent": result.exponent,
        "prefactor": result.prefactor,
        "mbar": result.mbar_reference,
        "relative_gap": result.relative_gap,
        "constrained_prefactor": fit.map(|f| f.constrained_prefactor),
        "fit_residual": fit.map(|f| f.residual),
        "exact_rows": result.rows.iter().filter(|r| r.status == RowStatus::Exact).count(),
        "mesh_refinement": result.refinement,
        "refinement_history": result.refinement_history.iter().map(|(r, e)| json!({"refinement": r, "E_min": e})).collect::<Vec<_>>(),
        "restart_spread": result.rows.iter().map(|r| r.restart_spread).collect::<Vec<_>>(),
        "E_recovery": result.rows.iter().map(|r| r.e_recovery).collect::<Vec<_>>(),
        "Q_star": result.q_star.matrix().row_major(),
        "seed": exp.seed,
    });
    Ok(ScalingReport { result, csv, summary })
}

/// Output of [`cmd_check`].
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub summary: Value,
    pub passed: bool,
    /// One line per violated property, echoing the input.
    pub violations: Vec<String>,
}

fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    loop {
        let m = Matrix::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        if m.det().abs() > 0.1 {
            return m;
        }
    }
}

fn manifold_label(sf: &SpaceForm) -> String {
    match sf.kind() {
        SpaceFormKind::Synthetic => format!("synthetic(n={})", sf.n()),
        kind => format!("{kind:?}(K={}, n={})", sf.curvature().unwrap_or(0.0), sf.n()),
    }
}

/// Property suites: the perturbed-distance inequality and its equality
/// family, the metric-expansion order, and curvature symmetries.
pub fn cmd_check(exp: &Experiment) -> Result<CheckReport, CliError> {
    let n = exp.n;
    let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
    let mut violations = Vec::new();

    let mut worst_excess = f64::NEG_INFINITY;
    let mut failures = 0u64;
    for _ in 0..exp.check.samples {
        let (a, b, f) = (
            random_invertible(&mut rng, n),
            random_invertible(&mut rng, n),
            random_invertible(&mut rng, n),
        );
        let pb = perturbed_distance_bound(&a, &b, &f).map_err(numerical)?;
        worst_excess = worst_excess.max(pb.lhs - pb.rhs);
        if !pb.holds(RANDOMIZED_TOL) {
            failures += 1;
            if failures <= 5 {
                violations.push(format!(
                    "perturbed distance bound: A={:?} B={:?} F={:?} lhs={} rhs={}",
                    a.row_major(),
                    b.row_major(),
                    f.row_major(),
                    pb.lhs,
                    pb.rhs
                ));
            }
        }
    }

    let mut equality = Vec::new();
    let mut equality_dev: f64 = 0.0;
    for (x, y, z) in [(2.0, 2.0, 2.0), (1.5, 3.0, 1.25), (4.0, 1.1, 2.5)] {
        let mut da = vec![1.0; n];
        let mut db = vec![1.0; n];
        let mut df = vec![1.0; n];
        da[0] = 1.0 / x;
        db[0] = 1.0 / y;
        df[0] = x * y * z;
        let pb = perturbed_distance_bound(&Matrix::diag(&da), &Matrix::diag(&db), &Matrix::diag(&df))
            .map_err(numerical)?;
        let dev = (pb.lhs - pb.rhs).abs();
        equality_dev = equality_dev.max(dev);
        if dev > RANDOMIZED_TOL {
            violations.push(format!("equality family a={x} b={y} c={z}: lhs={} rhs={}", pb.lhs, pb.rhs));
        }
        equality.push(json!({"a": x, "b": y, "c": z, "lhs": pb.lhs, "rhs": pb.rhs}));
    }

    let sign = if exp.check.flip_curvature_sign { -1.0 } else { 1.0 };
    let mut spaces = vec![exp.domain.clone(), exp.target.clone()];
    for k in [-1.0, 1.0] {
        spaces.push(SpaceForm::with_curvature(k, n).map_err(numerical)?);
    }
    let mut expansion = Vec::new();
    for sf in &spaces {
        let fit = metric_expansion_order_with_sign(sf, &EXPANSION_RADII, sign).map_err(numerical)?;
        let ok = fit.order >= MIN_EXPANSION_ORDER;
        if !ok {
            violations.push(format!(
                "metric expansion order {} < {MIN_EXPANSION_ORDER} for {} (errors {:?})",
                fit.order,
                manifold_label(sf),
                fit.errors
            ));
        }
        expansion.push(json!({
            "manifold": manifold_label(sf),
            "order": if fit.order.is_finite() { json!(fit.order) } else { json!("inf") },
            "r2_coefficient": fit.r2_coefficient,
            "passed": ok,
        }));
    }

    let mut tensors: Vec<(String, CurvatureTensor)> = vec![
        ("domain".into(), exp.domain.curvature_tensor().clone()),
        ("target".into(), exp.target.curvature_tensor().clone()),
    ];
    for k in 0..5 {
        let t = random_curvature_like(&mut rng, n, 3);
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q = Rotation::exp_skew(n, &w);
        tensors.push((format!("random[{k}]"), t.clone()));
        tensors.push((format!("random[{k}] pulled back"), t.pullback(&q).map_err(numerical)?));
    }
    let mut symmetry_dev: f64 = 0.0;
    for (label, t) in &tensors {
        let d = t.symmetry_defects().max();
        symmetry_dev = symmetry_dev.max(d);
        if d > ALGEBRAIC_TOL {
            violations.push(format!("curvature symmetries of {label}: defect {d:e}"));
        }
    }

    let passed = violations.is_empty();
    let summary = json!({
        "seed": exp.seed,
        "dimension": n,
        "passed": passed,
        "perturbed_distance": {
            "samples": exp.check.samples,
            "failures": failures,
            "max_excess": worst_excess,
            "tolerance": RANDOMIZED_TOL,
            "passed": failures == 0,
        },
        "equality_family": {
            "cases": equality,
            "max_deviation": equality_dev,
            "passed": equality_dev <= RANDOMIZED_TOL,
        },
        "metric_expansion": {
            "flip_curvature_sign": exp.check.flip_curvature_sign,
            "min_order": MIN_EXPANSION_ORDER,
            "manifolds": expansion,
        },
        "curvature_symmetry": {
            "tensors": tensors.len(),
            "max_defect": symmetry_dev,
            "tolerance": ALGEBRAIC_TOL,
            "passed": symmetry_dev <= ALGEBRAIC_TOL,
        },
        "violations": violations,
    });
    Ok(CheckReport {
        summary,
        passed,
        violations,
    })
}
