use std::sync::Arc;

use crate::limit_solver::{ball_quadrature, PolyVectorBasis};
use crate::space_forms::SpaceForm;
use crate::tensor_core::Rotation;

use super::{BallMesh, DiscreteMap, FemError};

/// `X ↦ Q(X + h² f(X) + h² c)` with `c = −⨍ f`, in the rescaled target chart.
#[derive(Clone, Debug)]
pub struct RecoveryMap {
    basis: PolyVectorBasis,
    coeffs: Vec<f64>,
    q: Rotation,
    h: f64,
    shift: [f64; 3],
}

impl RecoveryMap {
    pub fn new(basis: &PolyVectorBasis, coeffs: &[f64], q: Rotation, h: f64) -> Result<Self, FemError> {
        let n = basis.n();
        if coeffs.len() != basis.len() || q.n() != n {
            return Err(FemError::InvalidInput(format!(
                "recovery map needs {} coefficients and a rotation of dimension {n}",
                basis.len()
            )));
        }
        let quad = ball_quadrature(n, basis.degree().max(1))?;
        let mut shift = [0.0; 3];
        for (x, w) in quad.nodes.iter().zip(&quad.weights) {
            let f = basis.evaluate(coeffs, &x[..n]);
            for i in 0..n {
                shift[i] -= w * f[i];
            }
        }
        Ok(Self {
            basis: basis.clone(),
            coeffs: coeffs.to_vec(),
            q,
            h,
            shift,
        })
    }

    /// Centering constant `c = −⨍ f`.
    pub fn shift(&self) -> [f64; 3] {
        self.shift
    }

    pub fn eval(&self, x: &[f64]) -> [f64; 3] {
        let n = self.basis.n();
        let f = self.basis.evaluate(&self.coeffs, x);
        let h2 = self.h * self.h;
        let mut v = [0.0; 3];
        for i in 0..n {
            v[i] = x[i] + h2 * (f[i] + self.shift[i]);
        }
        self.q.apply(&v[..n])
    }
}

/// Nodal interpolant of the recovery map on `mesh`, checked against the target
/// chart at scale `h`.
pub fn recovery_map(
    basis: &PolyVectorBasis,
    coeffs: &[f64],
    q: Rotation,
    mesh: Arc<BallMesh>,
    h: f64,
    tgt: &SpaceForm,
) -> Result<DiscreteMap, FemError> {
    let r = RecoveryMap::new(basis, coeffs, q, h)?;
    let n = basis.n();
    let u = DiscreteMap::from_fn(mesh, |x| r.eval(x));
    for v in &u.nodal {
        let y: Vec<f64> = v[..n].iter().map(|c| h * c).collect();
        tgt.check_in_chart(&y)?;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic_fem::build_ball_mesh;

    #[test]
    fn zero_field_is_identity() {
        let b = PolyVectorBasis::new(2, 3).unwrap();
        let m = Arc::new(build_ball_mesh(2, 1).unwrap());
        let tgt = SpaceForm::euclidean(2).unwrap();
        let u = recovery_map(&b, &vec![0.0; b.len()], Rotation::identity(2), m.clone(), 0.3, &tgt).unwrap();
        assert_eq!(u.nodal, m.vertices);
    }

    #[test]
    fn centered() {
        for n in [2, 3] {
            let b = PolyVectorBasis::new(n, 3).unwrap();
            let coeffs: Vec<f64> = (0..b.len()).map(|k| ((k * 7 % 5) as f64 - 2.0) * 0.3).collect();
            let q = Rotation::exp_skew(n, &[0.4, -0.2, 0.9]);
            let r = RecoveryMap::new(&b, &coeffs, q, 0.2).unwrap();
            let quad = ball_quadrature(n, 4).unwrap();
            for i in 0..n {
                let mean = quad.average(|x| r.eval(x)[i] - q.apply(x)[i]);
                assert!(mean.abs() < 1e-12, "n={n} i={i} mean={mean}");
            }
        }
    }

    #[test]
    fn outside_chart() {
        let b = PolyVectorBasis::new(2, 1).unwrap();
        let m = Arc::new(build_ball_mesh(2, 0).unwrap());
        let tgt = SpaceForm::sphere(1.0, 2).unwrap();
        let u = recovery_map(&b, &vec![0.0; b.len()], Rotation::identity(2), m, 3.0, &tgt);
        assert!(matches!(u, Err(FemError::SpaceForm(_))));
    }
}
