use crate::regression::fit_line;

use super::FemError;

/// Power-law fit `E ≈ C hᵖ` of a scaling sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    /// Free log–log slope.
    pub exponent: f64,
    /// `exp(intercept)` of the free fit.
    pub free_prefactor: f64,
    /// `exp(intercept)` with the slope forced to 4 (geometric mean of `E/h⁴`).
    pub constrained_prefactor: f64,
    /// Intercept of the linear fit of `E/h⁴` against `h²`.
    pub extrapolated_prefactor: f64,
    /// RMS residual of the free log–log fit.
    pub residual: f64,
}

/// Least-squares fits of `(h, E)` pairs; requires `E > 0` and two distinct `h`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit, FemError> {
    if points.len() < 2 {
        return Err(FemError::DegenerateFit(format!("{} points", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(FemError::DegenerateFit(format!("non-positive point {p:?}")));
    }
    let lh: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let le: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let free = fit_line(&lh, &le).ok_or_else(|| FemError::DegenerateFit("all h equal".into()))?;
    let constrained =
        (lh.iter().zip(&le).map(|(h, e)| e - 4.0 * h).sum::<f64>() / points.len() as f64).exp();
    let h2: Vec<f64> = points.iter().map(|p| p.0 * p.0).collect();
    let ratio: Vec<f64> = points.iter().map(|p| p.1 / p.0.powi(4)).collect();
    let extrap = fit_line(&h2, &ratio).ok_or_else(|| FemError::DegenerateFit("all h equal".into()))?;
    Ok(PowerLawFit {
        exponent: free.slope,
        free_prefactor: free.intercept.exp(),
        constrained_prefactor: constrained,
        extrapolated_prefactor: extrap.intercept,
        residual: free.rms_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quartic() {
        let pts: Vec<_> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h: &f64| (h, h.powi(4))).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.exponent - 4.0).abs() < 1e-12);
        assert!((f.constrained_prefactor - 1.0).abs() < 1e-12);
        assert!((f.free_prefactor - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn correction_term() {
        let hs = [0.4, 0.28, 0.2, 0.14, 0.1, 0.07, 0.05];
        let data = |hs: &[f64]| -> Vec<(f64, f64)> { hs.iter().map(|&h| (h, 3.0 * h.powi(4) * (1.0 + h * h))).collect() };
        let f = fit_power_law(&data(&hs)).unwrap();
        assert!((f.extrapolated_prefactor - 3.0).abs() < 0.03);
        // the constrained prefactor approaches 3 as the h-window shrinks
        let mut last = f64::INFINITY;
        for k in 0..4 {
            let c = fit_power_law(&data(&hs[k..])).unwrap().constrained_prefactor;
            assert!(c > 3.0 && c < last);
            last = c;
        }
        assert!((last - 3.0) / 3.0 < 0.02);
    }

    #[test]
    fn degenerate() {
        assert!(matches!(fit_power_law(&[(0.1, 1.0), (0.1, 2.0)]), Err(FemError::DegenerateFit(_))));
        assert!(matches!(fit_power_law(&[(0.1, 1.0)]), Err(FemError::DegenerateFit(_))));
    }
}
