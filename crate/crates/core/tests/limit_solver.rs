mod common;

use curvscale::limit_solver::{m_of_q, minimize_over_rotations, LimitSolver, PolyVectorBasis, QSearchConfig};
use curvscale::space_forms::SpaceForm;
use curvscale::tensor_core::{random_curvature_like, CurvatureTensor, Rotation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solver(n: usize, degree: usize) -> LimitSolver {
    LimitSolver::new(PolyVectorBasis::new(n, degree).unwrap()).unwrap()
}

fn sphere_minus_flat(n: usize) -> CurvatureTensor {
    CurvatureTensor::constant_curvature(1.0, n).unwrap()
}

#[test]
fn fixture_values_are_the_rational_limits() {
    approx::assert_relative_eq!(common::limit_fixture("n2_sphere1_euclidean"), 1.0 / 192.0, max_relative = 1e-14);
    approx::assert_relative_eq!(common::limit_fixture("n3_sphere1_euclidean"), 3.0 / 350.0, max_relative = 1e-12);
}

#[test]
fn sphere_to_flat_matches_fixture() {
    let m2 = solver(2, 5).solve(&sphere_minus_flat(2)).unwrap().m;
    assert!((m2 - common::limit_fixture("n2_sphere1_euclidean")).abs() <= 1e-12, "n=2: {m2:e}");
    for degree in [3, 5, 7] {
        let m3 = solver(3, degree).solve(&sphere_minus_flat(3)).unwrap().m;
        assert!((m3 - common::limit_fixture("n3_sphere1_euclidean")).abs() <= 1e-12, "n=3, degree {degree}: {m3:e}");
    }
}

#[test]
fn degree_escalation_is_monotone_and_stabilizes() {
    let a = sphere_minus_flat(2);
    let ms: Vec<f64> = (1..=7).map(|d| solver(2, d).solve(&a).unwrap().m).collect();
    for w in ms.windows(2) {
        assert!(w[1] <= w[0] + 1e-15, "{ms:?}");
    }
    assert!((ms[4] - ms[6]).abs() <= 1e-10);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = random_curvature_like(&mut rng, 3, 3);
    let ms: Vec<f64> = (1..=4).map(|d| solver(3, d).solve(&b).unwrap().m).collect();
    for w in ms.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "{ms:?}");
    }
}

#[test]
fn quadratic_homogeneity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2, 3] {
        let s = solver(n, 4);
        let a = random_curvature_like(&mut rng, n, 2);
        let m = s.solve(&a).unwrap().m;
        for c in [2.0, 3.0, 10.0] {
            let mc = s.solve(&(&a * c)).unwrap().m;
            approx::assert_relative_eq!(mc, c * c * m, max_relative = 1e-10);
        }
    }
}

#[test]
fn positive_on_nonzero_tensors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [2, 3] {
        let s = solver(n, 3);
        for _ in 0..20 {
            let terms = rng.random_range(1..4);
            let a = random_curvature_like(&mut rng, n, terms);
            let m = s.solve(&a).unwrap().m;
            assert!(m > 1e-8, "n={n}: m = {m:e}");
        }
    }
}

#[test]
fn space_form_pairs_are_rotation_independent() {
    let s = solver(3, 3);
    let r = SpaceForm::sphere(1.0, 3).unwrap();
    let rt = SpaceForm::hyperbolic(-0.5, 3).unwrap();
    let base = m_of_q(&s, r.curvature_tensor(), rt.curvature_tensor(), &Rotation::identity(3)).unwrap().m;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let m = m_of_q(&s, r.curvature_tensor(), rt.curvature_tensor(), &Rotation::exp_skew(3, &w)).unwrap().m;
        approx::assert_relative_eq!(m, base, max_relative = 1e-10);
    }
}

#[test]
fn flat_target_is_rotation_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let r = random_curvature_like(&mut rng, 3, 3);
    let zero = CurvatureTensor::zeros(3).unwrap();
    let s = solver(3, 3);
    let base = m_of_q(&s, &r, &zero, &Rotation::identity(3)).unwrap().m;
    for _ in 0..10 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let m = m_of_q(&s, &r, &zero, &Rotation::exp_skew(3, &w)).unwrap().m;
        assert!((m - base).abs() <= 1e-8, "{m:e} vs {base:e}");
    }
}

#[test]
fn multi_start_search_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let r = random_curvature_like(&mut rng, 3, 3);
    let rt = random_curvature_like(&mut rng, 3, 3);
    let s = solver(3, 3);
    let results: Vec<_> = (0..5)
        .map(|seed| {
            let cfg = QSearchConfig {
                seed,
                ..QSearchConfig::default()
            };
            minimize_over_rotations(&s, &r, &rt, &cfg).unwrap()
        })
        .collect();
    let best = results.iter().map(|r| r.m_star).fold(f64::INFINITY, f64::min);
    for res in &results {
        assert!(res.m_star <= res.coarse_min + 1e-15);
        assert!((res.m_star - best).abs() <= 1e-6 * best.max(1.0), "{} vs {best}", res.m_star);
        let check = m_of_q(&s, &r, &rt, &res.q_star).unwrap().m;
        approx::assert_relative_eq!(check, res.m_star, max_relative = 1e-12);
    }
}

#[test]
fn planar_search_finds_grid_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let r = random_curvature_like(&mut rng, 2, 2);
    let rt = random_curvature_like(&mut rng, 2, 2);
    let s = solver(2, 4);
    let res = minimize_over_rotations(&s, &r, &rt, &QSearchConfig::default()).unwrap();
    let dense = (0..720)
        .map(|k| {
            let q = Rotation::from_angle(k as f64 * std::f64::consts::TAU / 720.0);
            m_of_q(&s, &r, &rt, &q).unwrap().m
        })
        .fold(f64::INFINITY, f64::min);
    assert!(res.m_star <= dense + 1e-12, "{} vs dense {dense}", res.m_star);
}
