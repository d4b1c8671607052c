//! Frobenius distance to SO(n) and the metric-aware variant used by the
//! elastic energy.

use super::{Matrix, Rotation, TensorError, ALGEBRAIC_TOL};

/// Eigenvalue floor below which a metric is not treated as positive definite.
pub const SPD_FLOOR: f64 = 1e-14;

/// Nearest rotation to `f` in the Frobenius norm.
///
/// Uses the determinant-corrected polar factor `U·diag(1,…,1,det(UVᵀ))·Vᵀ`.
/// In two dimensions the same factor is the rotation by
/// `atan2(F₂₁ − F₁₂, F₁₁ + F₂₂)`, which is evaluated directly.
pub fn nearest_rotation(f: &Matrix) -> Result<Rotation, TensorError> {
    if !f.is_finite() {
        return Err(TensorError::NonFinite);
    }
    match f.n() {
        2 => {
            let (q, r) = f.conformal_split_2d();
            // two smallest (= both) singular values q + r and r - q coincide
            if f.det() < 0.0 && 2.0 * q <= ALGEBRAIC_TOL * (1.0 + r) {
                return Err(TensorError::AmbiguousProjection);
            }
            let theta = (f[(1, 0)] - f[(0, 1)]).atan2(f[(0, 0)] + f[(1, 1)]);
            Ok(Rotation::from_angle(theta))
        }
        _ => {
            let svd = f.svd()?;
            let s = svd.sigma;
            let vt = svd.v.transpose();
            let d = (svd.u * vt).det();
            if d < 0.0 && (s[1] - s[2]).abs() <= ALGEBRAIC_TOL * (1.0 + s[1]) {
                return Err(TensorError::AmbiguousProjection);
            }
            let corr = Matrix::diag(&[1.0, 1.0, d.signum()]);
            Ok(Rotation::new_unchecked(svd.u * corr * vt))
        }
    }
}

/// `min_{Q ∈ SO(n)} |F − Q|`, from the singular values of `F`.
pub fn dist_to_son(f: &Matrix) -> Result<f64, TensorError> {
    if !f.is_finite() {
        return Err(TensorError::NonFinite);
    }
    let n = f.n();
    if n == 2 {
        // dist² = 2(q − 1)² + 2r² for either sign of det F
        let (q, r) = f.conformal_split_2d();
        return Ok((2.0 * (q - 1.0).powi(2) + 2.0 * r * r).sqrt());
    }
    let s = f.singular_values()?;
    let mut acc = 0.0;
    for (i, &si) in s[..n].iter().enumerate() {
        if i == n - 1 && f.det() < 0.0 {
            acc += (si + 1.0).powi(2);
        } else {
            acc += (si - 1.0).powi(2);
        }
    }
    Ok(acc.sqrt())
}

/// Gradient of `F ↦ dist²(F, SO(n))`, i.e. `2(F − nearest_rotation(F))`.
///
/// Orientation-reversing inputs are rejected.
pub fn grad_dist_sq(f: &Matrix) -> Result<Matrix, TensorError> {
    let det = f.det();
    if det <= 0.0 {
        return Err(TensorError::NonPositiveDeterminant(det));
    }
    let q = nearest_rotation(f)?;
    Ok((*f - *q.matrix()) * 2.0)
}

fn spd_function(g: &Matrix, f: impl Fn(f64) -> f64) -> Result<Matrix, TensorError> {
    if !g.is_finite() {
        return Err(TensorError::NonFinite);
    }
    let (lam, _) = g.symmetric_eigen();
    if let Some(&bad) = lam[..g.n()].iter().find(|&&l| l <= SPD_FLOOR) {
        return Err(TensorError::NotSpd(bad));
    }
    Ok(g.spectral_map(f))
}

/// Principal square root of a symmetric positive definite matrix.
pub fn spd_sqrt(g: &Matrix) -> Result<Matrix, TensorError> {
    spd_function(g, f64::sqrt)
}

pub fn spd_inv_sqrt(g: &Matrix) -> Result<Matrix, TensorError> {
    spd_function(g, |l| 1.0 / l.sqrt())
}

/// `dist(A, SO(g, g̃)) = dist(g̃^{1/2} · A · g^{−1/2}, SO(n))`.
pub fn dist_general_frames(a: &Matrix, g: &Matrix, gt: &Matrix) -> Result<f64, TensorError> {
    if a.n() != g.n() || a.n() != gt.n() {
        return Err(TensorError::DimensionMismatch {
            left: a.n(),
            right: g.n().max(gt.n()),
        });
    }
    let frame = spd_sqrt(gt)? * *a * spd_inv_sqrt(g)?;
    dist_to_son(&frame)
}

/// Both sides of the perturbed-distance inequality
/// `dist(F) ≤ (1+α)(1+β)·dist(AFB) + α + β + αβ` with `α = |A⁻¹ − Id|`, `β = |B⁻¹ − Id|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbedBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl PerturbedBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

pub fn perturbed_distance_bound(
    a: &Matrix,
    b: &Matrix,
    f: &Matrix,
) -> Result<PerturbedBound, TensorError> {
    let n = f.n();
    let a_inv = a.inverse(SPD_FLOOR).ok_or(TensorError::NotInvertible(a.det().abs()))?;
    let b_inv = b.inverse(SPD_FLOOR).ok_or(TensorError::NotInvertible(b.det().abs()))?;
    let alpha = (a_inv - Matrix::identity(n)).norm();
    let beta = (b_inv - Matrix::identity(n)).norm();
    let lhs = dist_to_son(f)?;
    let perturbed = dist_to_son(&(*a * *f * *b))?;
    let rhs = (1.0 + alpha) * (1.0 + beta) * perturbed + alpha + beta + alpha * beta;
    Ok(PerturbedBound { lhs, rhs })
}
