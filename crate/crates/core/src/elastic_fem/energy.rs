use std::sync::Arc;

use rayon::prelude::*;

use crate::space_forms::SpaceForm;
use crate::tensor_core::{nearest_rotation, Matrix};

use super::{BallMesh, FemError};

/// Nodal values of a P1 map from the unit-ball mesh into the rescaled target
/// chart: the physical target point of node `a` is `exp_q(h · nodal[a])`.
#[derive(Clone, Debug)]
pub struct DiscreteMap {
    pub mesh: Arc<BallMesh>,
    pub nodal: Vec<[f64; 3]>,
}

impl DiscreteMap {
    /// The map `X ↦ X`.
    pub fn identity(mesh: Arc<BallMesh>) -> Self {
        let nodal = mesh.vertices.clone();
        Self { mesh, nodal }
    }

    pub fn from_fn(mesh: Arc<BallMesh>, mut f: impl FnMut(&[f64]) -> [f64; 3]) -> Self {
        let n = mesh.n;
        let nodal = mesh.vertices.iter().map(|v| f(&v[..n])).collect();
        Self { mesh, nodal }
    }

    pub(crate) fn flatten(&self) -> Vec<f64> {
        let n = self.mesh.n;
        self.nodal.iter().flat_map(|v| v[..n].to_vec()).collect()
    }

    pub(crate) fn from_flat(mesh: Arc<BallMesh>, x: &[f64]) -> Self {
        let n = mesh.n;
        let nodal = x
            .chunks(n)
            .map(|c| {
                let mut v = [0.0; 3];
                v[..n].copy_from_slice(c);
                v
            })
            .collect();
        Self { mesh, nodal }
    }
}

#[derive(Clone, Debug)]
struct QPoint {
    /// barycentric coordinates
    bary: [f64; 4],
    /// normalized `w · |T| · ρ(h x)`
    weight: f64,
    /// `g_dom(h x)^{−1/2}`
    sinv: Matrix,
}

/// The discrete energy `E_h(u)` on a fixed mesh, with everything that does
/// not depend on `u` precomputed.
#[derive(Clone, Debug)]
pub struct ElasticProblem {
    mesh: Arc<BallMesh>,
    tgt: SpaceForm,
    h: f64,
    /// `∇λ_a` per cell, `a = 0..=n`
    shape_grads: Vec<[[f64; 3]; 4]>,
    /// quadrature points grouped by cell
    qps: Vec<Vec<QPoint>>,
}

struct CellOut {
    energy: f64,
    grad: [[f64; 3]; 4],
}

impl ElasticProblem {
    pub fn new(mesh: Arc<BallMesh>, dom: &SpaceForm, tgt: &SpaceForm, h: f64) -> Result<Self, FemError> {
        let n = mesh.n;
        if dom.n() != n || tgt.n() != n {
            return Err(FemError::InvalidInput(format!(
                "dimensions: mesh {n}, domain {}, target {}",
                dom.n(),
                tgt.n()
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(FemError::InvalidInput(format!("scale h = {h} must be positive")));
        }
        for v in &mesh.vertices {
            let y: Vec<f64> = v[..n].iter().map(|c| h * c).collect();
            dom.check_in_chart(&y)?;
        }
        let rule = mesh.quad_rule.points(n);
        let mut shape_grads = Vec::with_capacity(mesh.cell_count());
        let mut qps = Vec::with_capacity(mesh.cell_count());
        let mut total = 0.0;
        for c in 0..mesh.cell_count() {
            let e = mesh.edge_matrix(c);
            let vol = mesh.signed_volume(c);
            if vol <= 0.0 {
                return Err(FemError::InvertedCell { cell: c, det: vol });
            }
            let einv = e.inverse(0.0).ok_or(FemError::InvertedCell { cell: c, det: vol })?;
            // ∇λ_k = row k−1 of E⁻¹ for k ≥ 1, ∇λ_0 = −Σ
            let mut g = [[0.0; 3]; 4];
            for k in 1..=n {
                for i in 0..n {
                    g[k][i] = einv[(k - 1, i)];
                    g[0][i] -= einv[(k - 1, i)];
                }
            }
            shape_grads.push(g);
            let cell = &mesh.cells[c];
            let mut pts = Vec::with_capacity(rule.len());
            for (bary, w) in &rule {
                let mut x = [0.0; 3];
                for a in 0..=n {
                    for i in 0..n {
                        x[i] += bary[a] * mesh.vertices[cell[a]][i];
                    }
                }
                let y: Vec<f64> = x[..n].iter().map(|v| h * v).collect();
                let rho = dom.volume_density(&y)?;
                let weight = w * vol * rho;
                total += weight;
                pts.push(QPoint {
                    bary: *bary,
                    weight,
                    sinv: dom.metric_inv_sqrt(&y)?,
                });
            }
            qps.push(pts);
        }
        for p in qps.iter_mut().flatten() {
            p.weight /= total;
        }
        Ok(Self {
            mesh,
            tgt: tgt.clone(),
            h,
            shape_grads,
            qps,
        })
    }

    pub fn mesh(&self) -> &Arc<BallMesh> {
        &self.mesh
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    fn differential(&self, c: usize, nodal: &[[f64; 3]]) -> Matrix {
        let n = self.mesh.n;
        let cell = &self.mesh.cells[c];
        let g = &self.shape_grads[c];
        let mut d = Matrix::zeros(n);
        for a in 0..=n {
            let u = &nodal[cell[a]];
            for i in 0..n {
                for k in 0..n {
                    d[(i, k)] += u[i] * g[a][k];
                }
            }
        }
        d
    }

    fn cell(&self, c: usize, nodal: &[[f64; 3]], with_grad: bool) -> Result<CellOut, FemError> {
        let n = self.mesh.n;
        let cell = &self.mesh.cells[c];
        let d = self.differential(c, nodal);
        let det = d.det();
        if !(det > 0.0) {
            return Err(FemError::InvertedCell { cell: c, det });
        }
        let mut out = CellOut {
            energy: 0.0,
            grad: [[0.0; 3]; 4],
        };
        let mut p_sum = Matrix::zeros(n);
        for q in &self.qps[c] {
            let mut y = [0.0; 3];
            for a in 0..=n {
                for i in 0..n {
                    y[i] += q.bary[a] * nodal[cell[a]][i];
                }
            }
            for v in y.iter_mut() {
                *v *= self.h;
            }
            let (st, dst) = if with_grad {
                self.tgt.metric_sqrt_with_derivatives(&y[..n])?
            } else {
                (self.tgt.metric_sqrt(&y[..n])?, [Matrix::zeros(n); 3])
            };
            let ds = d * q.sinv;
            let m = st * ds;
            let r = nearest_rotation(&m)?;
            let diff = m - *r.matrix();
            out.energy += q.weight * diff.norm_sq();
            if with_grad {
                let g = diff * (2.0 * q.weight);
                p_sum = p_sum + st * g * q.sinv;
                let gds = g * ds.transpose();
                for mm in 0..n {
                    let t = self.h * gds.dot(&dst[mm]);
                    for a in 0..=n {
                        out.grad[a][mm] += q.bary[a] * t;
                    }
                }
            }
        }
        if with_grad {
            let sg = &self.shape_grads[c];
            for a in 0..=n {
                let v = p_sum.mul_vec(&sg[a][..n]);
                for i in 0..n {
                    out.grad[a][i] += v[i];
                }
            }
        }
        Ok(out)
    }

    fn check_map(&self, u: &DiscreteMap) -> Result<(), FemError> {
        if u.nodal.len() != self.mesh.vertex_count() {
            return Err(FemError::InvalidInput(format!(
                "map has {} nodes, mesh has {}",
                u.nodal.len(),
                self.mesh.vertex_count()
            )));
        }
        Ok(())
    }

    fn cells(&self, nodal: &[[f64; 3]], with_grad: bool) -> Result<Vec<CellOut>, FemError> {
        (0..self.mesh.cell_count())
            .into_par_iter()
            .map(|c| self.cell(c, nodal, with_grad))
            .collect()
    }

    /// `E_h(u)`: the `dVol_g`-weighted average of `dist²(g̃^{1/2} du g^{−1/2}, SO(n))`.
    pub fn energy(&self, u: &DiscreteMap) -> Result<f64, FemError> {
        self.check_map(u)?;
        Ok(self.cells(&u.nodal, false)?.iter().map(|c| c.energy).sum())
    }

    /// `E_h(u)` and its gradient with respect to the nodal values.
    pub fn energy_and_gradient(&self, u: &DiscreteMap) -> Result<(f64, Vec<[f64; 3]>), FemError> {
        self.check_map(u)?;
        let n = self.mesh.n;
        let outs = self.cells(&u.nodal, true)?;
        let mut grad = vec![[0.0; 3]; self.mesh.vertex_count()];
        let mut e = 0.0;
        // fixed cell order keeps the reduction deterministic
        for (c, out) in outs.iter().enumerate() {
            e += out.energy;
            for a in 0..=n {
                let v = self.mesh.cells[c][a];
                for i in 0..n {
                    grad[v][i] += out.grad[a][i];
                }
            }
        }
        Ok((e, grad))
    }
}

/// Convenience wrapper: `E_h(u)` for domain `dom` and target `tgt`.
pub fn elastic_energy(u: &DiscreteMap, dom: &SpaceForm, tgt: &SpaceForm, h: f64) -> Result<f64, FemError> {
    ElasticProblem::new(u.mesh.clone(), dom, tgt, h)?.energy(u)
}

/// Convenience wrapper: nodal gradient of `E_h` at `u`.
pub fn energy_gradient(
    u: &DiscreteMap,
    dom: &SpaceForm,
    tgt: &SpaceForm,
    h: f64,
) -> Result<Vec<[f64; 3]>, FemError> {
    Ok(ElasticProblem::new(u.mesh.clone(), dom, tgt, h)?.energy_and_gradient(u)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic_fem::build_ball_mesh;
    use crate::limit_solver::gauss_legendre;
    use crate::tensor_core::{CurvatureTensor, Rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh(n: usize, r: usize) -> Arc<BallMesh> {
        Arc::new(build_ball_mesh(n, r).unwrap())
    }

    #[test]
    fn isometry_has_zero_energy() {
        let m = mesh(2, 2);
        for k in [-1.0, 0.0, 1.0] {
            let sf = SpaceForm::with_curvature(k, 2).unwrap();
            let u = DiscreteMap::identity(m.clone());
            for h in [0.4, 0.1] {
                let p = ElasticProblem::new(m.clone(), &sf, &sf, h).unwrap();
                let (e, g) = p.energy_and_gradient(&u).unwrap();
                assert!(e <= 1e-14, "K={k} h={h} e={e}");
                let gmax = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                assert!(gmax < 1e-12);
            }
        }
    }

    /// `⨍ (1/α − 1)² α r dr` for the identity map from the unit sphere into
    /// the plane, with `α = sin(hr)/(hr)`.
    fn radial_oracle(h: f64) -> f64 {
        let (x, w) = gauss_legendre(40);
        let (mut num, mut den) = (0.0, 0.0);
        for (t, wt) in x.iter().zip(&w) {
            let r = 0.5 * (t + 1.0);
            let a = (h * r).sin() / (h * r);
            num += wt * (1.0 / a - 1.0).powi(2) * a * r;
            den += wt * a * r;
        }
        num / den
    }

    #[test]
    fn identity_sphere_to_plane_matches_radial_quadrature() {
        let m = mesh(2, 4);
        let dom = SpaceForm::sphere(1.0, 2).unwrap();
        let tgt = SpaceForm::euclidean(2).unwrap();
        let e = elastic_energy(&DiscreteMap::identity(m), &dom, &tgt, 0.2).unwrap();
        let exact = radial_oracle(0.2);
        assert!(e > 0.0);
        assert!((e - exact).abs() / exact < 5e-3, "{e} vs {exact}");
    }

    fn random_map(m: &Arc<BallMesh>, seed: u64, amp: f64) -> DiscreteMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m.n;
        DiscreteMap::from_fn(m.clone(), |x| {
            let mut v = [0.0; 3];
            for i in 0..n {
                v[i] = x[i] + amp * rng.random_range(-1.0..1.0);
            }
            v
        })
    }

    fn fd_check(dom: &SpaceForm, tgt: &SpaceForm, n: usize, h: f64) {
        let m = mesh(n, 0);
        let u = random_map(&m, 7, 0.02);
        let p = ElasticProblem::new(m.clone(), dom, tgt, h).unwrap();
        let (_, g) = p.energy_and_gradient(&u).unwrap();
        let scale = g.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for a in 0..u.nodal.len() {
            for i in 0..n {
                let mut up = u.clone();
                let mut um = u.clone();
                up.nodal[a][i] += 1e-6;
                um.nodal[a][i] -= 1e-6;
                let fd = (p.energy(&up).unwrap() - p.energy(&um).unwrap()) / 2e-6;
                assert!((fd - g[a][i]).abs() <= 1e-5 * scale, "node {a} comp {i}: {fd} vs {}", g[a][i]);
            }
        }
        // uniform translation probes only the target-metric sampling term
        let t = [0.3, -0.7, 0.5];
        let shifted = |s: f64| {
            let mut v = u.clone();
            for x in v.nodal.iter_mut() {
                for i in 0..n {
                    x[i] += s * t[i];
                }
            }
            v
        };
        let fd = (p.energy(&shifted(1e-6)).unwrap() - p.energy(&shifted(-1e-6)).unwrap()) / 2e-6;
        let an: f64 = g.iter().map(|v| (0..n).map(|i| v[i] * t[i]).sum::<f64>()).sum();
        assert!((fd - an).abs() <= 1e-5 * an.abs().max(scale), "{fd} vs {an}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = SpaceForm::sphere(1.0, 2).unwrap();
        let hyp = SpaceForm::hyperbolic(-1.0, 2).unwrap();
        fd_check(&s, &hyp, 2, 0.4);
        fd_check(&hyp, &s, 2, 0.3);
        let s3 = SpaceForm::sphere(1.0, 3).unwrap();
        let syn = SpaceForm::synthetic(CurvatureTensor::from_shape_operator(&Matrix::diag(&[1.0, -0.5, 2.0])))
            .unwrap();
        fd_check(&s3, &syn, 3, 0.3);
    }

    #[test]
    fn permutation_invariance_is_exact() {
        let m = mesh(2, 1);
        let u = random_map(&m, 3, 0.01);
        let nv = m.vertex_count();
        // reverse the vertex numbering
        let perm: Vec<usize> = (0..nv).rev().collect();
        let mut pm = (*m).clone();
        for (old, &new) in perm.iter().enumerate() {
            pm.vertices[new] = m.vertices[old];
        }
        for c in pm.cells.iter_mut() {
            for v in c.iter_mut().take(3) {
                *v = perm[*v];
            }
        }
        let pm = Arc::new(pm);
        let mut pu = DiscreteMap::identity(pm.clone());
        for (old, &new) in perm.iter().enumerate() {
            pu.nodal[new] = u.nodal[old];
        }
        let dom = SpaceForm::sphere(1.0, 2).unwrap();
        let tgt = SpaceForm::euclidean(2).unwrap();
        let e1 = elastic_energy(&u, &dom, &tgt, 0.3).unwrap();
        let e2 = elastic_energy(&pu, &dom, &tgt, 0.3).unwrap();
        assert_eq!(e1.to_bits(), e2.to_bits());
    }

    #[test]
    fn chart_rotation_is_a_small_perturbation() {
        let m = mesh(2, 2);
        let dom = SpaceForm::sphere(1.0, 2).unwrap();
        let tgt = SpaceForm::euclidean(2).unwrap();
        let h = 0.1;
        let u = random_map(&m, 11, 1e-4);
        let r = Rotation::from_angle(0.7);
        let ru = DiscreteMap::from_fn(m.clone(), |x| {
            let i = m.vertices.iter().position(|v| v[0] == x[0] && v[1] == x[1]).unwrap();
            r.apply(&u.nodal[i][..2])
        });
        let e = elastic_energy(&u, &dom, &tgt, h).unwrap();
        let er = elastic_energy(&ru, &dom, &tgt, h).unwrap();
        assert!((e - er).abs() <= 0.1 * e);
    }

    #[test]
    fn inverted_and_outside_chart() {
        let m = mesh(2, 0);
        let dom = SpaceForm::sphere(1.0, 2).unwrap();
        let flip = DiscreteMap::from_fn(m.clone(), |x| [x[0], -x[1], 0.0]);
        let err = elastic_energy(&flip, &dom, &dom, 0.1).unwrap_err();
        assert!(matches!(err, FemError::InvertedCell { .. }));
        let big = DiscreteMap::from_fn(m.clone(), |x| [40.0 * x[0], 40.0 * x[1], 0.0]);
        let err = elastic_energy(&big, &dom, &dom, 0.1).unwrap_err();
        assert!(matches!(err, FemError::SpaceForm(_)));
        assert!(ElasticProblem::new(m, &dom, &dom, 3.0).is_err());
    }
}
