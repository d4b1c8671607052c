use std::ops::{Add, Mul, Sub};

use super::matrix::check_dim;
use super::{Matrix, Rotation, TensorError, ALGEBRAIC_TOL};

/// Components `A_{ijkl}` of a (1,3)-tensor in an orthonormal frame.
///
/// Convention: `A_{ijkl} = g(V_i, A(V_j, V_k, V_l))` with
/// `R(U,V,W) = ∇_U∇_V W − ∇_V∇_U W − ∇_{[U,V]} W`, so that a space form of
/// curvature `K` has `A_{ijkl} = K(δ_{kl}δ_{ij} − δ_{jl}δ_{ik})` and the metric in
/// normal coordinates is `g_{ik} = δ_{ik} + ⅓ A_{ijkl} x^j x^l + O(|x|³)`.
/// Authors using `R'(W,U,V) = R(U,V,W)` get the opposite sign in that expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureTensor {
    n: usize,
    comps: Vec<f64>,
    curvature_like: bool,
}

/// Largest componentwise violation of each Riemann symmetry.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymmetryDefects {
    pub antisym_jk: f64,
    pub antisym_il: f64,
    pub pair_exchange: f64,
    pub bianchi: f64,
}

impl SymmetryDefects {
    pub fn max(&self) -> f64 {
        self.antisym_jk
            .max(self.antisym_il)
            .max(self.pair_exchange)
            .max(self.bianchi)
    }
}

impl CurvatureTensor {
    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    pub fn zeros(n: usize) -> Result<Self, TensorError> {
        check_dim(n)?;
        Ok(Self {
            n,
            comps: vec![0.0; n.pow(4)],
            curvature_like: true,
        })
    }

    /// Wraps raw components (index order `i, j, k, l`, row-major). When
    /// `curvature_like` is set, all four Riemann symmetries are checked.
    pub fn from_components(
        n: usize,
        comps: Vec<f64>,
        curvature_like: bool,
    ) -> Result<Self, TensorError> {
        check_dim(n)?;
        if comps.len() != n.pow(4) {
            return Err(TensorError::DimensionMismatch {
                left: comps.len(),
                right: n.pow(4),
            });
        }
        if comps.iter().any(|x| !x.is_finite()) {
            return Err(TensorError::NonFinite);
        }
        let t = Self {
            n,
            comps,
            curvature_like,
        };
        if curvature_like {
            let defect = t.symmetry_defects().max();
            if defect > ALGEBRAIC_TOL {
                return Err(TensorError::NotCurvatureLike(defect));
            }
        }
        Ok(t)
    }

    /// Space-form curvature `K(δ_{kl}δ_{ij} − δ_{jl}δ_{ik})`.
    pub fn constant_curvature(k: f64, n: usize) -> Result<Self, TensorError> {
        let mut t = Self::zeros(n)?;
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for i in 0..n {
            for j in 0..n {
                for kk in 0..n {
                    for l in 0..n {
                        let v = k * (d(kk, l) * d(i, j) - d(j, l) * d(i, kk));
                        let id = t.idx(i, j, kk, l);
                        t.comps[id] = v;
                    }
                }
            }
        }
        Ok(t)
    }

    /// Gauss-equation tensor `S_{ij}S_{kl} − S_{ik}S_{jl}` of a symmetric
    /// shape operator `S`. Signed sums of these span all curvature-like tensors.
    pub fn from_shape_operator(s: &Matrix) -> Self {
        let n = s.n();
        let s = s.sym();
        let mut comps = vec![0.0; n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        comps[((i * n + j) * n + k) * n + l] =
                            s[(i, j)] * s[(k, l)] - s[(i, k)] * s[(j, l)];
                    }
                }
            }
        }
        Self {
            n,
            comps,
            curvature_like: true,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_curvature_like(&self) -> bool {
        self.curvature_like
    }

    pub fn components(&self) -> &[f64] {
        &self.comps
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.comps[self.idx(i, j, k, l)]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|&x| x == 0.0)
    }

    pub fn symmetry_defects(&self) -> SymmetryDefects {
        let n = self.n;
        let mut d = SymmetryDefects::default();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let a = self.get(i, j, k, l);
                        d.antisym_jk = d.antisym_jk.max((a + self.get(i, k, j, l)).abs());
                        d.antisym_il = d.antisym_il.max((a + self.get(l, j, k, i)).abs());
                        d.pair_exchange = d.pair_exchange.max((a - self.get(k, l, i, j)).abs());
                        let b = a + self.get(i, k, l, j) + self.get(i, l, j, k);
                        d.bianchi = d.bianchi.max(b.abs());
                    }
                }
            }
        }
        d
    }

    fn check_same_dim(&self, other: usize) -> Result<(), TensorError> {
        if self.n != other {
            return Err(TensorError::DimensionMismatch {
                left: self.n,
                right: other,
            });
        }
        Ok(())
    }

    /// Pullback `Q⁻¹ A(QX, QY, QZ)`: `A'_{ijkl} = Σ Q_{ai}Q_{bj}Q_{ck}Q_{dl} A_{abcd}`.
    pub fn pullback(&self, q: &Rotation) -> Result<Self, TensorError> {
        self.check_same_dim(q.n())?;
        let n = self.n;
        let q = q.matrix();
        // contract one index at a time
        let mut cur = self.comps.clone();
        let mut next = vec![0.0; cur.len()];
        let stride = [n * n * n, n * n, n, 1];
        for &s in &stride {
            for (idx, out) in next.iter_mut().enumerate() {
                let digit = (idx / s) % n;
                let base = idx - digit * s;
                let mut acc = 0.0;
                for a in 0..n {
                    acc += q[(a, digit)] * cur[base + a * s];
                }
                *out = acc;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(Self {
            n,
            comps: cur,
            curvature_like: self.curvature_like,
        })
    }

    /// Raw contraction `C(x)_{ik} = Σ_{j,l} A_{ijkl} x^j x^l`.
    pub fn contract_xx(&self, x: &[f64]) -> Result<Matrix, TensorError> {
        self.check_same_dim(x.len())?;
        let n = self.n;
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    for l in 0..n {
                        acc += self.get(i, j, k, l) * x[j] * x[l];
                    }
                }
                m[(i, k)] = acc;
            }
        }
        Ok(m)
    }

    /// Source field `B(X)_{ik} = ⅙ Σ_{j,l} A_{ijkl} X^j X^l`.
    pub fn b_field(&self, x: &[f64]) -> Result<Matrix, TensorError> {
        Ok(self.contract_xx(x)? * (1.0 / 6.0))
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self {
            n: self.n,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            curvature_like: self.curvature_like && other.curvature_like,
        }
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, TensorError> {
        self.check_same_dim(other.n)?;
        Ok(self.zip(other, |a, b| a - b))
    }
}

impl Sub for &CurvatureTensor {
    type Output = CurvatureTensor;
    fn sub(self, rhs: &CurvatureTensor) -> CurvatureTensor {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Add for &CurvatureTensor {
    type Output = CurvatureTensor;
    fn add(self, rhs: &CurvatureTensor) -> CurvatureTensor {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Mul<f64> for &CurvatureTensor {
    type Output = CurvatureTensor;
    fn mul(self, s: f64) -> CurvatureTensor {
        CurvatureTensor {
            n: self.n,
            comps: self.comps.iter().map(|&a| a * s).collect(),
            curvature_like: self.curvature_like,
        }
    }
}

/// Random curvature-like tensor: a signed sum of Gauss-equation tensors built
/// from random symmetric matrices with entries in `[-1, 1)`.
pub fn random_curvature_like<R: rand::Rng>(rng: &mut R, n: usize, terms: usize) -> CurvatureTensor {
    let mut acc = CurvatureTensor::zeros(n).expect("n checked by caller");
    for t in 0..terms {
        let s = Matrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0)).sym();
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        acc = &acc + &(&CurvatureTensor::from_shape_operator(&s) * sign);
    }
    acc
}
