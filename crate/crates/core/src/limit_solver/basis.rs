use crate::tensor_core::Matrix;

use super::LimitError;

/// Vector-valued monomial fields `X ↦ e_i · X^α`, `|α| ≤ degree`.
///
/// Element `k` has monomial `k / n` and component `k % n`; monomials are
/// ordered by total degree, so the first `n` elements are the constants and
/// the next `n²` the linear fields.
#[derive(Clone, Debug)]
pub struct PolyVectorBasis {
    n: usize,
    degree: usize,
    exponents: Vec<[u32; 3]>,
}

/// Highest polynomial degree supported by [`PolyVectorBasis`].
pub const MAX_DEGREE: usize = 12;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

impl PolyVectorBasis {
    pub fn new(n: usize, degree: usize) -> Result<Self, LimitError> {
        if !(n == 2 || n == 3) {
            return Err(LimitError::UnsupportedDimension(n));
        }
        if degree > MAX_DEGREE {
            return Err(LimitError::UnsupportedOrder(degree));
        }
        let mut exponents = Vec::new();
        for total in 0..=degree as u32 {
            match n {
                2 => {
                    for a in (0..=total).rev() {
                        exponents.push([a, total - a, 0]);
                    }
                }
                _ => {
                    for a in (0..=total).rev() {
                        for b in (0..=total - a).rev() {
                            exponents.push([a, b, total - a - b]);
                        }
                    }
                }
            }
        }
        debug_assert_eq!(exponents.len(), binomial(n + degree, degree));
        Ok(Self {
            n,
            degree,
            exponents,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn monomial_count(&self) -> usize {
        self.exponents.len()
    }

    /// Number of vector fields, `n · C(n + d, d)`.
    pub fn len(&self) -> usize {
        self.n * self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[[u32; 3]] {
        &self.exponents
    }

    /// Values and gradients of every monomial at `x`.
    pub fn monomials(&self, x: &[f64]) -> (Vec<f64>, Vec<[f64; 3]>) {
        let n = self.n;
        let d = self.degree;
        // powers[v][p] = x_v^p
        let mut powers = [[0.0; 16]; 3];
        for v in 0..n {
            powers[v][0] = 1.0;
            for p in 1..=d {
                powers[v][p] = powers[v][p - 1] * x[v];
            }
        }
        let mut values = Vec::with_capacity(self.exponents.len());
        let mut grads = Vec::with_capacity(self.exponents.len());
        for e in &self.exponents {
            let mut val = 1.0;
            for v in 0..n {
                val *= powers[v][e[v] as usize];
            }
            let mut g = [0.0; 3];
            for (m, gm) in g.iter_mut().enumerate().take(n) {
                if e[m] == 0 {
                    continue;
                }
                let mut t = e[m] as f64;
                for v in 0..n {
                    let p = if v == m { e[v] - 1 } else { e[v] };
                    t *= powers[v][p as usize];
                }
                *gm = t;
            }
            values.push(val);
            grads.push(g);
        }
        (values, grads)
    }

    /// `f_c(x) = Σ c_k φ_k(x)`.
    pub fn evaluate(&self, coeffs: &[f64], x: &[f64]) -> [f64; 3] {
        let (vals, _) = self.monomials(x);
        let mut out = [0.0; 3];
        for (k, &c) in coeffs.iter().enumerate() {
            out[k % self.n] += c * vals[k / self.n];
        }
        out
    }

    /// `(df_c)_{ik} = ∂_k f_c^i` at `x`.
    pub fn gradient(&self, coeffs: &[f64], x: &[f64]) -> Matrix {
        let (_, grads) = self.monomials(x);
        let mut m = Matrix::zeros(self.n);
        for (k, &c) in coeffs.iter().enumerate() {
            let i = k % self.n;
            let g = &grads[k / self.n];
            for kk in 0..self.n {
                m[(i, kk)] += c * g[kk];
            }
        }
        m
    }

    /// Coefficients of the infinitesimal rigid motion `x ↦ b + W x`, where
    /// only the skew part of `W` is used.
    pub fn affine_skew_coefficients(&self, b: &[f64], w: &Matrix) -> Vec<f64> {
        let n = self.n;
        let mut c = vec![0.0; self.len()];
        c[..n].copy_from_slice(&b[..n]);
        if self.degree >= 1 {
            let skew = (*w - w.transpose()) * 0.5;
            for i in 0..n {
                for k in 0..n {
                    // linear monomial x_k sits at index 1 + k
                    c[(1 + k) * n + i] = skew[(i, k)];
                }
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        for (n, d) in [(2, 0), (2, 3), (2, 7), (3, 1), (3, 5)] {
            let b = PolyVectorBasis::new(n, d).unwrap();
            assert_eq!(b.len(), n * binomial(n + d, d));
        }
        assert_eq!(PolyVectorBasis::new(2, 5).unwrap().len(), 42);
        assert_eq!(PolyVectorBasis::new(3, 5).unwrap().len(), 168);
    }

    #[test]
    fn linear_monomials_follow_constants() {
        let b = PolyVectorBasis::new(3, 2).unwrap();
        assert_eq!(b.exponents()[0], [0, 0, 0]);
        assert_eq!(b.exponents()[1], [1, 0, 0]);
        assert_eq!(b.exponents()[2], [0, 1, 0]);
        assert_eq!(b.exponents()[3], [0, 0, 1]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = PolyVectorBasis::new(3, 4).unwrap();
        let coeffs: Vec<f64> = (0..b.len()).map(|k| ((k * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let x = [0.3, -0.2, 0.5];
        let g = b.gradient(&coeffs, &x);
        for m in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[m] += 1e-6;
            xm[m] -= 1e-6;
            let (fp, fm) = (b.evaluate(&coeffs, &xp), b.evaluate(&coeffs, &xm));
            for i in 0..3 {
                assert!(((fp[i] - fm[i]) / 2e-6 - g[(i, m)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn affine_skew_field_has_skew_gradient() {
        let b = PolyVectorBasis::new(2, 3).unwrap();
        let w = Matrix::from_row_slice(&[0.0, 1.5, 0.2, 0.0]).unwrap();
        let c = b.affine_skew_coefficients(&[0.4, -0.1], &w);
        let g = b.gradient(&c, &[0.3, 0.1]);
        assert!(g.sym().max_abs() < 1e-15);
        let v = b.evaluate(&c, &[0.0, 0.0]);
        assert_eq!(&v[..2], &[0.4, -0.1]);
    }
}
