//! Model manifolds with closed-form metrics in normal coordinates.
//!
//! For a space form of curvature `K` the normal-coordinate metric is
//! `g(x) = P + (s_K(r)/r)² (Id − P)` with `P` the projection onto `x`,
//! `r = |x|` and `s_K` the usual `sin`/`id`/`sinh` profile. Everything here is
//! evaluated through `α = s_K(r)/r` and `β = (1 − α)/r²`, which are entire
//! functions of `t = K r²` and stay accurate at the chart center.
//!
//! The `Synthetic` kind takes the quadratic model `g(x) = Id + ⅓ A(x)` for an
//! arbitrary curvature-like tensor `A`, which lets anisotropic curvature enter
//! the experiments.

use std::f64::consts::PI;

use thiserror::Error;

use crate::regression::fit_line;
use crate::tensor_core::{CurvatureTensor, Matrix, TensorError};

/// Sphere charts stop at this fraction of the injectivity radius `π/√K`.
pub const SPHERE_CHART_FRACTION: f64 = 0.9;
/// Synthetic charts keep the smallest metric eigenvalue above this floor.
pub const SYNTHETIC_EIGEN_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceFormError {
    #[error("curvature {curvature} inconsistent with {kind:?}")]
    InvalidCurvature { kind: SpaceFormKind, curvature: f64 },
    #[error("point at radius {radius} lies outside the chart of radius {limit}")]
    OutsideChart { radius: f64, limit: f64 },
    #[error("invalid expansion radii: {0}")]
    InvalidRadii(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceFormKind {
    Euclidean,
    Sphere,
    Hyperbolic,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceForm {
    kind: SpaceFormKind,
    curvature: f64,
    n: usize,
    tensor: CurvatureTensor,
    chart_radius: f64,
}

/// `Σ_k (−t)^k / (2k + 1 + offset)!` and its derivative in `t`.
fn alternating_series(t: f64, offset: u32) -> (f64, f64) {
    let mut value = 0.0;
    let mut deriv = 0.0;
    // term_k = (-t)^k / (2k+1+offset)!
    let mut fact = (1..=(1 + offset) as u64).product::<u64>() as f64;
    let mut pow = 1.0; // (-t)^k
    let mut pow_prev = 0.0; // (-t)^(k-1)
    for k in 0..24u32 {
        value += pow / fact;
        if k > 0 {
            deriv += -(k as f64) * pow_prev / fact;
        }
        pow_prev = pow;
        pow *= -t;
        let m = (2 * k + 2 + offset) as f64;
        fact *= m * (m + 1.0);
    }
    (value, deriv)
}

/// `(α, dα/dt, φ, dφ/dt)` with `α = s_K(r)/r`, `φ = (1 − α)/t`, `t = K r²`.
fn radial_profile(t: f64) -> (f64, f64, f64, f64) {
    if t.abs() <= 4.0 {
        let (a, da) = alternating_series(t, 0);
        let (p, dp) = alternating_series(t, 2);
        return (a, da, p, dp);
    }
    let (a, dads) = if t > 0.0 {
        let s = t.sqrt();
        (s.sin() / s, (s * s.cos() - s.sin()) / (s * s))
    } else {
        let s = (-t).sqrt();
        (s.sinh() / s, -(s * s.cosh() - s.sinh()) / (s * s))
    };
    // d/dt = (1/(2s)) d/ds, with ds/dt = ±1/(2s)
    let s = t.abs().sqrt();
    let da = dads / (2.0 * s);
    let p = (1.0 - a) / t;
    let dp = (-da * t - (1.0 - a)) / (t * t);
    (a, da, p, dp)
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl SpaceForm {
    pub fn euclidean(n: usize) -> Result<Self, SpaceFormError> {
        Ok(Self {
            kind: SpaceFormKind::Euclidean,
            curvature: 0.0,
            n,
            tensor: CurvatureTensor::zeros(n)?,
            chart_radius: f64::INFINITY,
        })
    }

    pub fn sphere(curvature: f64, n: usize) -> Result<Self, SpaceFormError> {
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(SpaceFormError::InvalidCurvature {
                kind: SpaceFormKind::Sphere,
                curvature,
            });
        }
        Ok(Self {
            kind: SpaceFormKind::Sphere,
            curvature,
            n,
            tensor: CurvatureTensor::constant_curvature(curvature, n)?,
            chart_radius: SPHERE_CHART_FRACTION * PI / curvature.sqrt(),
        })
    }

    pub fn hyperbolic(curvature: f64, n: usize) -> Result<Self, SpaceFormError> {
        if !(curvature < 0.0 && curvature.is_finite()) {
            return Err(SpaceFormError::InvalidCurvature {
                kind: SpaceFormKind::Hyperbolic,
                curvature,
            });
        }
        Ok(Self {
            kind: SpaceFormKind::Hyperbolic,
            curvature,
            n,
            tensor: CurvatureTensor::constant_curvature(curvature, n)?,
            chart_radius: f64::INFINITY,
        })
    }

    /// Space form with the kind chosen by the sign of `curvature`.
    pub fn with_curvature(curvature: f64, n: usize) -> Result<Self, SpaceFormError> {
        if curvature > 0.0 {
            Self::sphere(curvature, n)
        } else if curvature < 0.0 {
            Self::hyperbolic(curvature, n)
        } else {
            Self::euclidean(n)
        }
    }

    /// Quadratic-metric model `Id + ⅓ A(x)` for a curvature-like tensor.
    pub fn synthetic(tensor: CurvatureTensor) -> Result<Self, SpaceFormError> {
        if !tensor.is_curvature_like() {
            let d = tensor.symmetry_defects().max();
            return Err(SpaceFormError::Tensor(TensorError::NotCurvatureLike(d)));
        }
        let n = tensor.n();
        let mut lowest: f64 = 0.0;
        for dir in sample_directions(n, if n == 2 { 720 } else { 2000 }) {
            let (lam, _) = tensor.contract_xx(&dir)?.symmetric_eigen();
            lowest = lam[..n].iter().fold(lowest, |m, &l| m.min(l / 3.0));
        }
        // smallest eigenvalue of g(x) is ≥ 1 + r²·lowest over sampled directions
        let chart_radius = if lowest < 0.0 {
            0.99 * ((1.0 - SYNTHETIC_EIGEN_FLOOR) / -lowest).sqrt()
        } else {
            f64::INFINITY
        };
        Ok(Self {
            kind: SpaceFormKind::Synthetic,
            curvature: f64::NAN,
            n,
            tensor,
            chart_radius,
        })
    }

    pub fn kind(&self) -> SpaceFormKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sectional curvature; `None` for the synthetic kind.
    pub fn curvature(&self) -> Option<f64> {
        (self.kind != SpaceFormKind::Synthetic).then_some(self.curvature)
    }

    pub fn curvature_tensor(&self) -> &CurvatureTensor {
        &self.tensor
    }

    pub fn chart_radius(&self) -> f64 {
        self.chart_radius
    }

    pub fn check_in_chart(&self, x: &[f64]) -> Result<(), SpaceFormError> {
        if x.len() != self.n {
            return Err(TensorError::DimensionMismatch {
                left: x.len(),
                right: self.n,
            }
            .into());
        }
        let radius = norm_sq(x).sqrt();
        if !(radius < self.chart_radius) {
            return Err(SpaceFormError::OutsideChart {
                radius,
                limit: self.chart_radius,
            });
        }
        Ok(())
    }

    fn profile(&self, x: &[f64]) -> (f64, f64, f64, f64) {
        radial_profile(self.curvature * norm_sq(x))
    }

    fn synthetic_metric(&self, x: &[f64]) -> Matrix {
        let c = self.tensor.contract_xx(x).expect("dimension checked");
        Matrix::identity(self.n) + c * (1.0 / 3.0)
    }

    /// Pullback metric `g(x)` in normal coordinates.
    pub fn pullback_metric(&self, x: &[f64]) -> Result<Matrix, SpaceFormError> {
        self.check_in_chart(x)?;
        if self.kind == SpaceFormKind::Synthetic {
            return Ok(self.synthetic_metric(x));
        }
        let (a, _, p, _) = self.profile(x);
        let beta = self.curvature * p;
        // α² Id + (1 − α²) x̂x̂ᵀ, written without dividing by |x|²
        Ok(Matrix::identity(self.n) * (a * a) + Matrix::outer(x, x) * (beta * (1.0 + a)))
    }

    /// `g(x)^{1/2}`.
    pub fn metric_sqrt(&self, x: &[f64]) -> Result<Matrix, SpaceFormError> {
        self.check_in_chart(x)?;
        if self.kind == SpaceFormKind::Synthetic {
            return Ok(crate::tensor_core::spd_sqrt(&self.synthetic_metric(x))?);
        }
        let (a, _, p, _) = self.profile(x);
        Ok(Matrix::identity(self.n) * a + Matrix::outer(x, x) * (self.curvature * p))
    }

    /// `g(x)^{−1/2}`.
    pub fn metric_inv_sqrt(&self, x: &[f64]) -> Result<Matrix, SpaceFormError> {
        self.check_in_chart(x)?;
        if self.kind == SpaceFormKind::Synthetic {
            return Ok(crate::tensor_core::spd_inv_sqrt(&self.synthetic_metric(x))?);
        }
        let (a, _, p, _) = self.profile(x);
        let beta = self.curvature * p;
        Ok((Matrix::identity(self.n) - Matrix::outer(x, x) * beta) * (1.0 / a))
    }

    /// `g(x)^{1/2}` together with its partial derivatives `∂/∂x_m`.
    pub fn metric_sqrt_with_derivatives(
        &self,
        x: &[f64],
    ) -> Result<(Matrix, [Matrix; 3]), SpaceFormError> {
        self.check_in_chart(x)?;
        let n = self.n;
        let mut ds = [Matrix::zeros(n); 3];
        if self.kind == SpaceFormKind::Synthetic {
            let g = self.synthetic_metric(x);
            let (lam, v) = g.symmetric_eigen();
            if let Some(&bad) = lam[..n].iter().find(|&&l| l <= crate::tensor_core::SPD_FLOOR) {
                return Err(TensorError::NotSpd(bad).into());
            }
            let root: Vec<f64> = lam[..n].iter().map(|l| l.sqrt()).collect();
            let s = Matrix::from_fn(n, |i, j| (0..n).map(|k| v[(i, k)] * root[k] * v[(j, k)]).sum());
            for (m, dsm) in ds.iter_mut().enumerate().take(n) {
                // ∂g/∂x_m = ⅓ Σ (A_{imkl} x^l + A_{ijkm} x^j)
                let dg = Matrix::from_fn(n, |i, k| {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += self.tensor.get(i, m, k, l) * x[l] + self.tensor.get(i, l, k, m) * x[l];
                    }
                    acc / 3.0
                });
                let rotated = v.transpose() * dg * v;
                let core = Matrix::from_fn(n, |i, j| rotated[(i, j)] / (root[i] + root[j]));
                *dsm = v * core * v.transpose();
            }
            return Ok((s, ds));
        }
        let k = self.curvature;
        let (a, da, p, dp) = self.profile(x);
        let beta = k * p;
        let xx = Matrix::outer(x, x);
        let s = Matrix::identity(n) * a + xx * beta;
        for m in 0..n {
            let dt = 2.0 * k * x[m];
            let mut e_m = [0.0; 3];
            e_m[m] = 1.0;
            let sym = Matrix::outer(&e_m[..n], x) + Matrix::outer(x, &e_m[..n]);
            ds[m] = Matrix::identity(n) * (da * dt) + xx * (k * dp * dt) + sym * beta;
        }
        Ok((s, ds))
    }

    /// `√det g(x)`.
    pub fn volume_density(&self, x: &[f64]) -> Result<f64, SpaceFormError> {
        self.check_in_chart(x)?;
        if self.kind == SpaceFormKind::Synthetic {
            return Ok(self.synthetic_metric(x).det().sqrt());
        }
        let (a, _, _, _) = self.profile(x);
        Ok(a.powi(self.n as i32 - 1))
    }
}

/// Deterministic unit directions: equally spaced angles for `n = 2`, a
/// Fibonacci lattice on the sphere for `n = 3`.
pub fn sample_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![rho * phi.cos(), rho * phi.sin(), z]
                })
                .collect()
        }
    }
}

/// Outcome of comparing the exact metric with its quadratic curvature model.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionFit {
    pub radii: Vec<f64>,
    pub errors: Vec<f64>,
    /// Slope of `log e` against `log r`; `+∞` when every error vanishes.
    pub order: f64,
    /// Tangential `r²` coefficient of `g − Id`, Richardson-extrapolated from
    /// the two smallest radii. For a space form this is `−K/3`.
    pub r2_coefficient: f64,
}

/// Fits the order of `|g(x) − (Id + ⅓ A(x))|` as `|x| → 0`.
pub fn metric_expansion_order(sf: &SpaceForm, radii: &[f64]) -> Result<ExpansionFit, SpaceFormError> {
    metric_expansion_order_with_sign(sf, radii, 1.0)
}

/// As [`metric_expansion_order`], with the model `Id + sign·⅓ A(x)`. A sign of
/// `−1` reproduces the opposite curvature convention and should fit order ≈ 2.
pub fn metric_expansion_order_with_sign(
    sf: &SpaceForm,
    radii: &[f64],
    sign: f64,
) -> Result<ExpansionFit, SpaceFormError> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|&r| r <= 0.0) {
        return Err(SpaceFormError::InvalidRadii(format!("{radii:?}")));
    }
    let n = sf.n();
    let dirs = sample_directions(n, if n == 2 { 16 } else { 26 });
    let tensor = sf.curvature_tensor();
    let mut errors = Vec::with_capacity(radii.len());
    let mut tangential = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut e: f64 = 0.0;
        for d in &dirs {
            let x: Vec<f64> = d.iter().map(|v| v * r).collect();
            let g = sf.pullback_metric(&x)?;
            let model = Matrix::identity(n) + tensor.contract_xx(&x)? * (sign / 3.0);
            e = e.max((g - model).norm());
        }
        errors.push(e);
        // x along e₁, tangential direction e₂
        let mut x = vec![0.0; n];
        x[0] = r;
        let g = sf.pullback_metric(&x)?;
        tangential.push((g[(1, 1)] - 1.0) / (r * r));
    }
    let order = if errors.iter().all(|&e| e < 1e-300) {
        f64::INFINITY
    } else {
        let (lr, le): (Vec<f64>, Vec<f64>) = radii
            .iter()
            .zip(&errors)
            .filter(|(_, &e)| e > 0.0)
            .map(|(r, e)| (r.ln(), e.ln()))
            .unzip();
        fit_line(&lr, &le).map(|f| f.slope).unwrap_or(f64::NAN)
    };
    let m = radii.len();
    let (r1, r2) = (radii[m - 2], radii[m - 1]);
    let (c1, c2) = (tangential[m - 2], tangential[m - 1]);
    let r2_coefficient = (c2 * r1 * r1 - c1 * r2 * r2) / (r1 * r1 - r2 * r2);
    Ok(ExpansionFit {
        radii: radii.to_vec(),
        errors,
        order,
        r2_coefficient,
    })
}
