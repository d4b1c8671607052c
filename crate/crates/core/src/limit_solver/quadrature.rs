use std::f64::consts::PI;

use super::LimitError;

/// Largest polynomial order accepted by [`ball_quadrature`].
pub const MAX_BALL_ORDER: usize = 60;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_m
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            if m == 1 {
                p1 = x;
                p0 = 1.0;
            } else {
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
            }
            // p1 = P_m(x), p0 = P_{m-1}(x)
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if m == 1 {
            x = 0.0;
            dp = 1.0;
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Averaging rule on the unit ball `B₁(0) ⊂ ℝⁿ` (weights sum to one).
#[derive(Clone, Debug)]
pub struct BallQuadrature {
    pub n: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl BallQuadrature {
    /// `⨍_{B₁} f`.
    pub fn average(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(&x[..self.n]))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Product rule exact for polynomials of total degree `≤ order`: Gauss–Legendre
/// in the radius with Jacobian `r^{n−1}`, equispaced angles in the plane, and
/// Gauss–Legendre in `cos θ` times equispaced azimuths in space.
pub fn ball_quadrature(n: usize, order: usize) -> Result<BallQuadrature, LimitError> {
    if !(n == 2 || n == 3) {
        return Err(LimitError::UnsupportedDimension(n));
    }
    if order > MAX_BALL_ORDER {
        return Err(LimitError::UnsupportedOrder(order));
    }
    // radial integrand r^k · r^{n−1}, k ≤ order
    let radial_points = (order + n).div_ceil(2).max(1);
    let (rn, rw) = gauss_legendre(radial_points);
    let radial: Vec<(f64, f64)> = rn
        .iter()
        .zip(&rw)
        .map(|(&t, &w)| {
            let r = 0.5 * (t + 1.0);
            (r, 0.5 * w * r.powi(n as i32 - 1))
        })
        .collect();
    let azimuths = order + 1;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match n {
        2 => {
            for &(r, wr) in &radial {
                for k in 0..azimuths {
                    let phi = 2.0 * PI * k as f64 / azimuths as f64;
                    nodes.push([r * phi.cos(), r * phi.sin(), 0.0]);
                    weights.push(wr / azimuths as f64);
                }
            }
        }
        _ => {
            let (zn, zw) = gauss_legendre((order + 1).div_ceil(2).max(1));
            for &(r, wr) in &radial {
                for (&z, &wz) in zn.iter().zip(&zw) {
                    let rho = (1.0 - z * z).sqrt();
                    for k in 0..azimuths {
                        let phi = 2.0 * PI * k as f64 / azimuths as f64;
                        nodes.push([r * rho * phi.cos(), r * rho * phi.sin(), r * z]);
                        weights.push(wr * wz / azimuths as f64);
                    }
                }
            }
        }
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(BallQuadrature { n, nodes, weights })
}
