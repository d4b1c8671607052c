//! Galerkin assembly and minimization of `I(f) = ⨍_{B₁} |sym df − B|²`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::tensor_core::{CurvatureTensor, Matrix};

use super::quadrature::{ball_quadrature, BallQuadrature};
use super::{LimitError, PolyVectorBasis};

/// Relative eigenvalue threshold separating the rigid-motion kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;
/// Relative eigenvalue below which the Gram matrix counts as indefinite.
pub const INDEFINITE_THRESHOLD: f64 = 1e-10;

/// `I(c) = cᵀ·gram·c − 2·rhsᵀc + c0` over a polynomial basis.
#[derive(Clone, Debug)]
pub struct QuadraticProblem {
    pub gram: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub c0: f64,
}

impl QuadraticProblem {
    pub fn value(&self, coeffs: &[f64]) -> f64 {
        let c = DVector::from_column_slice(coeffs);
        (c.transpose() * &self.gram * &c)[(0, 0)] - 2.0 * self.rhs.dot(&c) + self.c0
    }
}

/// Minimum value and one minimizing coefficient vector.
#[derive(Clone, Debug)]
pub struct LimitSolution {
    pub m: f64,
    pub coeffs: Vec<f64>,
}

/// Jacobi-scaled pseudo-inverse of a PSD Gram matrix with the kernel dropped.
#[derive(Clone, Debug)]
struct PseudoInverse {
    pinv: DMatrix<f64>,
    kernel_dim: usize,
}

impl PseudoInverse {
    fn new(gram: &DMatrix<f64>) -> Result<Self, LimitError> {
        let dim = gram.nrows();
        let dmax = (0..dim).fold(0.0f64, |m, i| m.max(gram[(i, i)].abs()));
        if let Some(i) = (0..dim).find(|&i| gram[(i, i)] < -INDEFINITE_THRESHOLD * dmax) {
            return Err(LimitError::IndefiniteGram(gram[(i, i)]));
        }
        let scale: Vec<f64> = (0..dim)
            .map(|i| {
                let d = gram[(i, i)];
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let scaled = DMatrix::from_fn(dim, dim, |i, j| {
            0.5 * (gram[(i, j)] + gram[(j, i)]) * scale[i] * scale[j]
        });
        let eig = SymmetricEigen::new(scaled);
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
        if let Some(&bad) = eig
            .eigenvalues
            .iter()
            .find(|&&l| l < -INDEFINITE_THRESHOLD * lmax.max(f64::MIN_POSITIVE))
        {
            return Err(LimitError::IndefiniteGram(bad));
        }
        let tau = KERNEL_THRESHOLD * lmax;
        let mut pinv = DMatrix::zeros(dim, dim);
        let mut kept = 0;
        for (k, &l) in eig.eigenvalues.iter().enumerate() {
            if l > tau {
                let v = eig.eigenvectors.column(k);
                pinv += (&v * v.transpose()) / l;
                kept += 1;
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                pinv[(i, j)] *= scale[i] * scale[j];
            }
        }
        Ok(Self {
            pinv,
            kernel_dim: dim - kept,
        })
    }

    fn apply(&self, rhs: &DVector<f64>) -> DVector<f64> {
        &self.pinv * rhs
    }
}

fn finish(prob: &QuadraticProblem, coeffs: DVector<f64>) -> LimitSolution {
    let coeffs: Vec<f64> = coeffs.iter().copied().collect();
    // tiny negative values are rounding; the functional is a sum of squares
    let m = prob.value(&coeffs).max(0.0);
    LimitSolution { m, coeffs }
}

/// Minimizes a quadratic problem through an eigen-decomposition of its Gram
/// matrix, returning the minimum-norm minimizer in Jacobi-scaled coordinates.
pub fn solve_m(prob: &QuadraticProblem) -> Result<LimitSolution, LimitError> {
    let pinv = PseudoInverse::new(&prob.gram)?;
    Ok(finish(prob, pinv.apply(&prob.rhs)))
}

/// Dimension of the numerical kernel of `gram` (relative threshold
/// [`KERNEL_THRESHOLD`] after Jacobi scaling).
pub fn kernel_dimension(gram: &DMatrix<f64>) -> Result<usize, LimitError> {
    Ok(PseudoInverse::new(gram)?.kernel_dim)
}

/// Cached assembly of the limit functional for one basis.
///
/// The Gram matrix does not depend on the curvature data, so it is assembled
/// and pseudo-inverted once; each tensor then costs one right-hand side.
#[derive(Clone, Debug)]
pub struct LimitSolver {
    basis: PolyVectorBasis,
    quad: BallQuadrature,
    /// monomial gradients per quadrature node
    grads: Vec<Vec<[f64; 3]>>,
    gram: DMatrix<f64>,
    pinv: PseudoInverse,
}

/// Quadrature order that integrates every term of the functional exactly.
pub fn required_order(degree: usize) -> usize {
    (2 * degree.saturating_sub(1)).max(degree + 1).max(4)
}

impl LimitSolver {
    pub fn new(basis: PolyVectorBasis) -> Result<Self, LimitError> {
        let quad = ball_quadrature(basis.n(), required_order(basis.degree()))?;
        Self::with_quadrature(basis, quad)
    }

    pub fn with_quadrature(basis: PolyVectorBasis, quad: BallQuadrature) -> Result<Self, LimitError> {
        if quad.n != basis.n() {
            return Err(LimitError::DimensionMismatch {
                left: basis.n(),
                right: quad.n,
            });
        }
        let n = basis.n();
        let grads: Vec<Vec<[f64; 3]>> = quad
            .nodes
            .iter()
            .map(|x| basis.monomials(&x[..n]).1)
            .collect();
        let dim = basis.len();
        let mut gram = DMatrix::zeros(dim, dim);
        for (g, &w) in grads.iter().zip(&quad.weights) {
            for a in 0..dim {
                let (i, p) = (a % n, &g[a / n]);
                if p.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for b in a..dim {
                    let (j, q) = (b % n, &g[b / n]);
                    // ⟨sym(e_i⊗p), sym(e_j⊗q)⟩ = ½(δ_ij p·q + p_j q_i)
                    let mut v = p[j] * q[i];
                    if i == j {
                        v += (0..n).map(|k| p[k] * q[k]).sum::<f64>();
                    }
                    gram[(a, b)] += 0.5 * w * v;
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let pinv = PseudoInverse::new(&gram)?;
        Ok(Self {
            basis,
            quad,
            grads,
            gram,
            pinv,
        })
    }

    pub fn basis(&self) -> &PolyVectorBasis {
        &self.basis
    }

    pub fn quadrature(&self) -> &BallQuadrature {
        &self.quad
    }

    pub fn kernel_dim(&self) -> usize {
        self.pinv.kernel_dim
    }

    fn check(&self, a: &CurvatureTensor) -> Result<(), LimitError> {
        if a.n() != self.basis.n() {
            return Err(LimitError::DimensionMismatch {
                left: self.basis.n(),
                right: a.n(),
            });
        }
        Ok(())
    }

    fn rhs_and_c0(&self, a: &CurvatureTensor) -> Result<(DVector<f64>, f64), LimitError> {
        self.check(a)?;
        let n = self.basis.n();
        let dim = self.basis.len();
        let mut rhs = DVector::zeros(dim);
        let mut c0 = 0.0;
        for ((x, &w), g) in self.quad.nodes.iter().zip(&self.quad.weights).zip(&self.grads) {
            let b = a.b_field(&x[..n])?;
            c0 += w * b.norm_sq();
            for k in 0..dim {
                // ⟨sym(e_i⊗p), B⟩ = (B p)_i for symmetric B
                let (i, p) = (k % n, &g[k / n]);
                let bp: f64 = (0..n).map(|l| 0.5 * (b[(i, l)] + b[(l, i)]) * p[l]).sum();
                rhs[k] += w * bp;
            }
        }
        Ok((rhs, c0))
    }

    /// Quadratic problem for the source tensor `a` (caller forms `R − R̃^Q`).
    pub fn assemble(&self, a: &CurvatureTensor) -> Result<QuadraticProblem, LimitError> {
        let (rhs, c0) = self.rhs_and_c0(a)?;
        Ok(QuadraticProblem {
            gram: self.gram.clone(),
            rhs,
            c0,
        })
    }

    /// `min_f I(f)` for the source tensor `a`, reusing the cached pseudo-inverse.
    pub fn solve(&self, a: &CurvatureTensor) -> Result<LimitSolution, LimitError> {
        let (rhs, c0) = self.rhs_and_c0(a)?;
        let coeffs = self.pinv.apply(&rhs);
        let prob = QuadraticProblem {
            gram: DMatrix::zeros(0, 0),
            rhs,
            c0,
        };
        let coeffs: Vec<f64> = coeffs.iter().copied().collect();
        let m = self.value(&prob, &coeffs).max(0.0);
        Ok(LimitSolution { m, coeffs })
    }

    fn value(&self, prob: &QuadraticProblem, c: &[f64]) -> f64 {
        let c = DVector::from_column_slice(c);
        (c.transpose() * &self.gram * &c)[(0, 0)] - 2.0 * prob.rhs.dot(&c) + prob.c0
    }

    /// `⨍ |sym df_c − B|²` evaluated pointwise by quadrature.
    pub fn functional_value(&self, a: &CurvatureTensor, coeffs: &[f64]) -> Result<f64, LimitError> {
        self.check(a)?;
        let n = self.basis.n();
        let mut acc = 0.0;
        for (x, &w) in self.quad.nodes.iter().zip(&self.quad.weights) {
            let df = self.basis.gradient(coeffs, &x[..n]);
            let b = a.b_field(&x[..n])?;
            acc += w * (df.sym() - b).norm_sq();
        }
        Ok(acc)
    }
}

/// One-shot assembly with a quadrature of sufficient order for `basis`.
pub fn assemble_limit_functional(
    a: &CurvatureTensor,
    basis: &PolyVectorBasis,
) -> Result<QuadraticProblem, LimitError> {
    LimitSolver::new(basis.clone())?.assemble(a)
}

/// Symmetric part of the gradient of the field with coefficients `c` at `x`.
pub fn sym_gradient(basis: &PolyVectorBasis, c: &[f64], x: &[f64]) -> Matrix {
    basis.gradient(c, x).sym()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_core::random_curvature_like;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn solver(n: usize, d: usize) -> LimitSolver {
        LimitSolver::new(PolyVectorBasis::new(n, d).unwrap()).unwrap()
    }

    #[test]
    fn zero_source() {
        let s = solver(2, 3);
        let z = CurvatureTensor::zeros(2).unwrap();
        let p = s.assemble(&z).unwrap();
        assert_eq!(p.c0, 0.0);
        assert!(p.rhs.iter().all(|&v| v == 0.0));
        let sol = solve_m(&p).unwrap();
        assert_eq!(sol.m, 0.0);
        assert!(sol.coeffs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_sphere_c0() {
        let s = solver(2, 3);
        let k1 = CurvatureTensor::constant_curvature(1.0, 2).unwrap();
        let p = s.assemble(&k1).unwrap();
        assert!((p.c0 - 1.0 / 108.0).abs() < 1e-16);
        assert!((p.value(&vec![0.0; s.basis().len()]) - p.c0).abs() < 1e-18);
    }

    #[test]
    fn kernel_is_rigid_motions() {
        for (n, d) in [(2, 1), (2, 3), (2, 5), (2, 7), (3, 1), (3, 3), (3, 5)] {
            let s = solver(n, d);
            assert_eq!(s.kernel_dim(), n + n * (n - 1) / 2, "n={n} d={d}");
            assert_eq!(kernel_dimension(&s.gram).unwrap(), s.kernel_dim());
        }
    }

    #[test]
    fn cached_and_one_shot_solves_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_curvature_like(&mut rng, 3, 3);
        let s = solver(3, 3);
        let cached = s.solve(&a).unwrap();
        let direct = solve_m(&s.assemble(&a).unwrap()).unwrap();
        assert!((cached.m - direct.m).abs() < 1e-14 * (1.0 + direct.m));
        let quad = s.functional_value(&a, &cached.coeffs).unwrap();
        assert!((quad - cached.m).abs() < 1e-13);
    }

    #[test]
    fn gauge_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3] {
            let s = solver(n, 4);
            let a = random_curvature_like(&mut rng, n, 3);
            let sol = s.solve(&a).unwrap();
            let w = Matrix::from_fn(n, |i, j| (i as f64 - 2.0 * j as f64) * 0.7);
            let shift = s.basis().affine_skew_coefficients(&[1.0, -2.0, 0.5], &w);
            let moved: Vec<f64> = sol.coeffs.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let v0 = s.functional_value(&a, &sol.coeffs).unwrap();
            let v1 = s.functional_value(&a, &moved).unwrap();
            assert!((v0 - v1).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_gram_rejected() {
        let prob = QuadraticProblem {
            gram: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            rhs: DVector::zeros(2),
            c0: 0.0,
        };
        assert!(matches!(solve_m(&prob), Err(LimitError::IndefiniteGram(_))));
    }

    #[test]
    fn dimension_mismatch() {
        let s = solver(2, 2);
        let a = CurvatureTensor::zeros(3).unwrap();
        assert!(matches!(s.solve(&a), Err(LimitError::DimensionMismatch { .. })));
    }
}
