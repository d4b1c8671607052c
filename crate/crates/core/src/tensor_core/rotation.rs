use super::{Matrix, TensorError, ALGEBRAIC_TOL};

/// An element of SO(n), n ∈ {2, 3}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Matrix);

impl Rotation {
    /// Validates orthogonality and orientation within [`ALGEBRAIC_TOL`].
    pub fn new(m: Matrix) -> Result<Self, TensorError> {
        let n = m.n();
        let defect = (m.transpose() * m - Matrix::identity(n)).norm();
        let det = m.det();
        if defect > ALGEBRAIC_TOL || (det - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(TensorError::NotRotation { defect, det });
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: Matrix) -> Self {
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    /// Planar rotation by `theta`.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(Matrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => c,
            (0, 1) => -s,
            _ => s,
        }))
    }

    /// Exponential of the skew matrix with axial vector `omega` (Rodrigues).
    /// For `n = 2`, only `omega[0]` is used as the rotation angle.
    pub fn exp_skew(n: usize, omega: &[f64]) -> Self {
        if n == 2 {
            return Self::from_angle(omega[0]);
        }
        let (wx, wy, wz) = (omega[0], omega[1], omega[2]);
        let theta_sq = wx * wx + wy * wy + wz * wz;
        let theta = theta_sq.sqrt();
        let k = Matrix::from_fn(3, |i, j| match (i, j) {
            (0, 1) => -wz,
            (0, 2) => wy,
            (1, 0) => wz,
            (1, 2) => -wx,
            (2, 0) => -wy,
            (2, 1) => wx,
            _ => 0.0,
        });
        let (a, b) = if theta < 1e-6 {
            (1.0 - theta_sq / 6.0, 0.5 - theta_sq / 24.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / theta_sq)
        };
        Self(Matrix::identity(3) + k * a + (k * k) * b)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, x: &[f64]) -> [f64; 3] {
        self.0.mul_vec(x)
    }
}
