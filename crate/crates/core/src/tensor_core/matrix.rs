use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};

use super::TensorError;

/// Dense square matrix of dimension 2 or 3, stored inline so it is `Copy`.
///
/// Entries outside the leading `n × n` block are kept at zero.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    n: usize,
    a: [[f64; 3]; 3],
}

/// Singular value decomposition `F = U · diag(sigma) · Vᵀ` with `sigma` sorted
/// in decreasing order.
#[derive(Clone, Copy, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: [f64; 3],
    pub v: Matrix,
}

pub(crate) fn check_dim(n: usize) -> Result<(), TensorError> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(TensorError::UnsupportedDimension(n))
    }
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n == 2 || n == 3, "unsupported dimension {n}");
        Self { n, a: [[0.0; 3]; 3] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i][j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be 4 or 9.
    pub fn from_row_slice(entries: &[f64]) -> Result<Self, TensorError> {
        let n = match entries.len() {
            4 => 2,
            9 => 3,
            len => return Err(TensorError::UnsupportedDimension(len)),
        };
        let m = Self::from_fn(n, |i, j| entries[i * n + j]);
        if !m.is_finite() {
            return Err(TensorError::NonFinite);
        }
        Ok(m)
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_fn(n, |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// Outer product `x ⊗ y`.
    pub fn outer(x: &[f64], y: &[f64]) -> Self {
        Self::from_fn(x.len(), |i, j| x[i] * y[j])
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            out.extend_from_slice(&self.a[i][..self.n]);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|r| r.iter().all(|x| x.is_finite()))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.a[j][i])
    }

    pub fn sym(&self) -> Self {
        Self::from_fn(self.n, |i, j| 0.5 * (self.a[i][j] + self.a[j][i]))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i][i]).sum()
    }

    /// Frobenius inner product `tr(Aᵀ B)`.
    pub fn dot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.a[i][j] * other.a[i][j];
            }
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().flatten().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    pub fn det(&self) -> f64 {
        let a = &self.a;
        match self.n {
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Inverse via the adjugate; `None` when `|det| < tol`.
    pub fn inverse(&self, tol: f64) -> Option<Self> {
        let d = self.det();
        if d.abs() < tol || !d.is_finite() {
            return None;
        }
        let a = &self.a;
        let inv = match self.n {
            2 => Self::from_fn(2, |i, j| match (i, j) {
                (0, 0) => a[1][1] / d,
                (0, 1) => -a[0][1] / d,
                (1, 0) => -a[1][0] / d,
                _ => a[0][0] / d,
            }),
            _ => Self::from_fn(3, |i, j| {
                // cofactor of (j, i)
                let (r0, r1) = match j {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let (c0, c1) = match i {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let minor = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                sign * minor / d
            }),
        };
        Some(inv)
    }

    pub fn mul_vec(&self, x: &[f64]) -> [f64; 3] {
        let mut y = [0.0; 3];
        for i in 0..self.n {
            for j in 0..self.n {
                y[i] += self.a[i][j] * x[j];
            }
        }
        y
    }

    pub(crate) fn to_na2(self) -> Matrix2<f64> {
        Matrix2::from_fn(|i, j| self.a[i][j])
    }

    pub(crate) fn to_na3(self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.a[i][j])
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Result<[f64; 3], TensorError> {
        if !self.is_finite() {
            return Err(TensorError::NonFinite);
        }
        match self.n {
            2 => {
                let (q, r) = self.conformal_split_2d();
                Ok([q + r, (q - r).abs(), 0.0])
            }
            _ => Ok(self.svd()?.sigma),
        }
    }

    /// For `n = 2`, splits `F` into conformal and anticonformal parts and
    /// returns their magnitudes `(q, r)`: singular values are `q + r` and `|q − r|`.
    pub(crate) fn conformal_split_2d(&self) -> (f64, f64) {
        let a = &self.a;
        let e = 0.5 * (a[0][0] + a[1][1]);
        let h = 0.5 * (a[1][0] - a[0][1]);
        let f = 0.5 * (a[0][0] - a[1][1]);
        let g = 0.5 * (a[1][0] + a[0][1]);
        (e.hypot(h), f.hypot(g))
    }

    pub fn svd(&self) -> Result<Svd, TensorError> {
        if !self.is_finite() {
            return Err(TensorError::NonFinite);
        }
        let (u, s, v) = match self.n {
            2 => {
                let svd = self
                    .to_na2()
                    .try_svd(true, true, f64::EPSILON, 0)
                    .ok_or(TensorError::SingularDecompositionFailure)?;
                let u = svd.u.ok_or(TensorError::SingularDecompositionFailure)?;
                let vt = svd.v_t.ok_or(TensorError::SingularDecompositionFailure)?;
                (
                    Self::from_fn(2, |i, j| u[(i, j)]),
                    vec![svd.singular_values[0], svd.singular_values[1]],
                    Self::from_fn(2, |i, j| vt[(j, i)]),
                )
            }
            _ => {
                let svd = self
                    .to_na3()
                    .try_svd(true, true, f64::EPSILON, 0)
                    .ok_or(TensorError::SingularDecompositionFailure)?;
                let u = svd.u.ok_or(TensorError::SingularDecompositionFailure)?;
                let vt = svd.v_t.ok_or(TensorError::SingularDecompositionFailure)?;
                (
                    Self::from_fn(3, |i, j| u[(i, j)]),
                    svd.singular_values.iter().copied().collect(),
                    Self::from_fn(3, |i, j| vt[(j, i)]),
                )
            }
        };
        // sort decreasing, permuting columns of U and V alongside
        let n = self.n;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
        let mut sigma = [0.0; 3];
        for (k, &o) in order.iter().enumerate() {
            sigma[k] = s[o];
        }
        Ok(Svd {
            u: Self::from_fn(n, |i, k| u.a[i][order[k]]),
            sigma,
            v: Self::from_fn(n, |i, k| v.a[i][order[k]]),
        })
    }

    /// Eigen-decomposition of a symmetric matrix: `(eigenvalues, eigenvectors as columns)`.
    pub fn symmetric_eigen(&self) -> ([f64; 3], Matrix) {
        let s = self.sym();
        match self.n {
            2 => {
                let e = SymmetricEigen::new(s.to_na2());
                (
                    [e.eigenvalues[0], e.eigenvalues[1], 0.0],
                    Self::from_fn(2, |i, j| e.eigenvectors[(i, j)]),
                )
            }
            _ => {
                let e = SymmetricEigen::new(s.to_na3());
                (
                    [e.eigenvalues[0], e.eigenvalues[1], e.eigenvalues[2]],
                    Self::from_fn(3, |i, j| e.eigenvectors[(i, j)]),
                )
            }
        }
    }

    /// Applies `f` to the eigenvalues of a symmetric matrix.
    pub(crate) fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let (lam, v) = self.symmetric_eigen();
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).map(|k| v.a[i][k] * f(lam[k]) * v.a[j][k]).sum())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.n && j < self.n);
        &self.a[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.a[i][j]
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    #[inline]
    fn mul(self, rhs: Matrix) -> Matrix {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i][k];
                for j in 0..n {
                    out.a[i][j] += aik * rhs.a[k][j];
                }
            }
        }
        out
    }
}

impl Mul<f64> for Matrix {
    type Output = Matrix;
    #[inline]
    fn mul(mut self, s: f64) -> Matrix {
        for r in self.a.iter_mut() {
            for x in r.iter_mut() {
                *x *= s;
            }
        }
        self
    }
}

impl Add for Matrix {
    type Output = Matrix;
    #[inline]
    fn add(mut self, rhs: Matrix) -> Matrix {
        debug_assert_eq!(self.n, rhs.n);
        for i in 0..3 {
            for j in 0..3 {
                self.a[i][j] += rhs.a[i][j];
            }
        }
        self
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    #[inline]
    fn sub(mut self, rhs: Matrix) -> Matrix {
        debug_assert_eq!(self.n, rhs.n);
        for i in 0..3 {
            for j in 0..3 {
                self.a[i][j] -= rhs.a[i][j];
            }
        }
        self
    }
}

impl Neg for Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self * -1.0
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.n).map(|i| &self.a[i][..self.n]).collect();
        write!(f, "Matrix{:?}", rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Matrix::from_row_slice(&[2.0, 1.0, 0.5, -1.0, 3.0, 0.2, 0.3, 0.1, 1.5]).unwrap();
        let inv = m.inverse(1e-14).unwrap();
        assert!((m * inv - Matrix::identity(3)).max_abs() < 1e-14);
        let m2 = Matrix::from_row_slice(&[2.0, 1.0, -1.0, 3.0]).unwrap();
        assert!((m2 * m2.inverse(1e-14).unwrap() - Matrix::identity(2)).max_abs() < 1e-15);
        assert!(Matrix::zeros(2).inverse(1e-14).is_none());
    }

    #[test]
    fn svd_reconstructs_sorted() {
        let m = Matrix::from_row_slice(&[0.1, 2.0, 0.0, -1.0, 0.3, 0.7, 0.4, 0.0, 3.0]).unwrap();
        let s = m.svd().unwrap();
        assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2]);
        let rec = s.u * Matrix::diag(&s.sigma[..3]) * s.v.transpose();
        assert!((rec - m).max_abs() < 1e-13);
    }

    #[test]
    fn closed_form_2d_singular_values_match_svd() {
        let m = Matrix::from_row_slice(&[0.3, -1.2, 2.5, 0.7]).unwrap();
        let a = m.singular_values().unwrap();
        let b = m.svd().unwrap().sigma;
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }

    #[test]
    fn non_finite_rejected() {
        assert_eq!(
            Matrix::from_row_slice(&[1.0, f64::NAN, 0.0, 1.0]),
            Err(TensorError::NonFinite)
        );
    }
}
