use std::collections::VecDeque;

/// How an L-BFGS run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub reason: StopReason,
}

#[derive(Clone, Debug)]
pub struct LbfgsSettings {
    pub memory: usize,
    pub max_iters: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Limited-memory BFGS with Armijo backtracking.
///
/// `f` returns `None` at infeasible points; the line search treats those as
/// rejected steps. The returned point is always the best feasible iterate.
pub fn lbfgs(
    mut f: impl FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    x0: Vec<f64>,
    grad_tol_abs: f64,
    set: &LbfgsSettings,
) -> Option<LbfgsOutcome> {
    let (mut fx, mut g) = f(&x0)?;
    let mut x = x0;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let tol = grad_tol_abs;
    let mut iters = 0;
    let mut reason = StopReason::MaxIterations;
    let mut fresh = true;
    while iters < set.max_iters {
        if max_abs(&g) < tol {
            reason = StopReason::Converged;
            break;
        }
        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match hist.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / max_abs(&g).max(1e-300),
        };
        for v in d.iter_mut() {
            *v *= gamma;
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v / max_abs(&g).max(1e-300)).collect();
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..set.max_backtracks {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            if let Some((fn_, gn)) = f(&xn) {
                if fn_ <= fx + set.armijo * step * slope {
                    accepted = Some((xn, fn_, gn));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if fresh || hist.is_empty() {
                reason = StopReason::LineSearchFailure;
                break;
            }
            // retry once along steepest descent
            hist.clear();
            fresh = true;
            continue;
        };
        fresh = false;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == set.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fn_;
        g = gn;
        iters += 1;
    }
    if reason == StopReason::MaxIterations && max_abs(&g) < tol {
        reason = StopReason::Converged;
    }
    Some(LbfgsOutcome {
        grad_norm: max_abs(&g),
        x,
        value: fx,
        iterations: iters,
        reason,
    })
}
