use std::collections::HashMap;
use std::f64::consts::PI;

use crate::tensor_core::Matrix;

use super::FemError;

/// Per-cell quadrature in barycentric coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum QuadRule {
    /// Centroid rule, exact for affine integrands.
    Centroid,
    /// Interior rule exact for quadratics (3 points on triangles, 4 on tets).
    #[default]
    Degree2,
}

impl QuadRule {
    /// Barycentric coordinates and weights (summing to one) on an `n`-simplex.
    pub fn points(self, n: usize) -> Vec<([f64; 4], f64)> {
        match (self, n) {
            (QuadRule::Centroid, 2) => vec![([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0], 1.0)],
            (QuadRule::Centroid, _) => vec![([0.25; 4], 1.0)],
            (QuadRule::Degree2, 2) => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                vec![
                    ([a, b, b, 0.0], 1.0 / 3.0),
                    ([b, a, b, 0.0], 1.0 / 3.0),
                    ([b, b, a, 0.0], 1.0 / 3.0),
                ]
            }
            (QuadRule::Degree2, _) => {
                let a = (5.0 + 3.0 * 5f64.sqrt()) / 20.0;
                let b = (5.0 - 5f64.sqrt()) / 20.0;
                (0..4)
                    .map(|k| {
                        let mut p = [b; 4];
                        p[k] = a;
                        (p, 0.25)
                    })
                    .collect()
            }
        }
    }
}

/// Simplicial mesh of the unit ball with positively oriented cells.
#[derive(Clone, Debug)]
pub struct BallMesh {
    pub n: usize,
    pub refinement: usize,
    pub vertices: Vec<[f64; 3]>,
    /// Vertex indices; only the first `n + 1` entries are used.
    pub cells: Vec<[usize; 4]>,
    pub quad_rule: QuadRule,
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

impl BallMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Edge matrix `[v₁ − v₀, …, v_n − v₀]` (columns) of a cell.
    pub fn edge_matrix(&self, c: usize) -> Matrix {
        let cell = &self.cells[c];
        let v0 = self.vertices[cell[0]];
        let mut e = Matrix::zeros(self.n);
        for k in 0..self.n {
            let d = sub(&self.vertices[cell[k + 1]], &v0);
            for i in 0..self.n {
                e[(i, k)] = d[i];
            }
        }
        e
    }

    /// Signed volume of a cell.
    pub fn signed_volume(&self, c: usize) -> f64 {
        let fact = if self.n == 2 { 2.0 } else { 6.0 };
        self.edge_matrix(c).det() / fact
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.cells.len()).map(|c| self.signed_volume(c)).sum()
    }

    /// Mesh size: largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        let mut h = 0.0f64;
        for cell in &self.cells {
            for a in 0..=self.n {
                for b in 0..a {
                    let d = sub(&self.vertices[cell[a]], &self.vertices[cell[b]]);
                    h = h.max((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
                }
            }
        }
        h
    }

    /// Volume of the exact unit ball.
    pub fn ball_volume(n: usize) -> f64 {
        if n == 2 {
            PI
        } else {
            4.0 * PI / 3.0
        }
    }

    fn orient(&mut self) {
        for c in 0..self.cells.len() {
            if self.signed_volume(c) < 0.0 {
                self.cells[c].swap(0, 1);
            }
        }
    }
}

/// Number of rings (n = 2) or lattice steps per axis (n = 3) at a refinement.
pub fn subdivisions(n: usize, refinement: usize) -> usize {
    if n == 2 {
        3 << refinement
    } else {
        2 << refinement
    }
}

fn disk_mesh(refinement: usize) -> BallMesh {
    let rings = subdivisions(2, refinement);
    let mut vertices = vec![[0.0; 3]];
    // ring k holds 6k vertices starting at index 1 + 3k(k−1)
    let start = |k: usize| if k == 0 { 0 } else { 1 + 3 * k * (k - 1) };
    for k in 1..=rings {
        let r = k as f64 / rings as f64;
        for j in 0..6 * k {
            let t = 2.0 * PI * j as f64 / (6 * k) as f64;
            vertices.push([r * t.cos(), r * t.sin(), 0.0]);
        }
    }
    let ring_vertex = |k: usize, j: usize| {
        if k == 0 {
            0
        } else {
            start(k) + j % (6 * k)
        }
    };
    let mut cells = Vec::with_capacity(6 * rings * rings);
    for k in 1..=rings {
        for s in 0..6 {
            let o = |t: usize| ring_vertex(k, s * k + t);
            let i = |t: usize| ring_vertex(k - 1, s * (k - 1) + t);
            for t in 0..k {
                cells.push([o(t), o(t + 1), i(t), 0]);
                if t + 1 < k {
                    cells.push([i(t), o(t + 1), i(t + 1), 0]);
                }
            }
        }
    }
    BallMesh {
        n: 2,
        refinement,
        vertices,
        cells,
        quad_rule: QuadRule::default(),
    }
}

/// Freudenthal subdivision of the octahedron `|y|₁ ≤ 1`, then the radial map
/// sending `|y|₁`-spheres to round spheres.
fn ball_mesh_3d(refinement: usize) -> BallMesh {
    let m = subdivisions(3, refinement) as i64;
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    // Kuhn simplices of the cube grid lying in {m ≥ z₁ ≥ z₂ ≥ z₃ ≥ 0}
    let mut corner_cells: Vec<[[i64; 3]; 4]> = Vec::new();
    for i in 0..m {
        for j in 0..=i {
            for k in 0..=j {
                for p in &perms {
                    let mut v = [[i, j, k]; 4];
                    for s in 0..3 {
                        v[s + 1] = v[s];
                        v[s + 1][p[s]] += 1;
                    }
                    if v.iter().all(|z| z[0] <= m && z[0] >= z[1] && z[1] >= z[2] && z[2] >= 0) {
                        corner_cells.push(v);
                    }
                }
            }
        }
    }
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    for octant in 0..8 {
        let sign = [
            if octant & 1 == 0 { 1 } else { -1 },
            if octant & 2 == 0 { 1 } else { -1 },
            if octant & 4 == 0 { 1 } else { -1 },
        ];
        for cell in &corner_cells {
            let mut ids = [0usize; 4];
            for (slot, z) in ids.iter_mut().zip(cell) {
                let y = [z[0] - z[1], z[1] - z[2], z[2]];
                let key = [sign[0] * y[0], sign[1] * y[1], sign[2] * y[2]];
                *slot = *index.entry(key).or_insert_with(|| {
                    let p = [key[0] as f64, key[1] as f64, key[2] as f64];
                    let l1 = p.iter().map(|v| v.abs()).sum::<f64>();
                    let l2 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let scale = if l2 > 0.0 { l1 / (l2 * m as f64) } else { 0.0 };
                    vertices.push([p[0] * scale, p[1] * scale, p[2] * scale]);
                    vertices.len() - 1
                });
            }
            cells.push(ids);
        }
    }
    BallMesh {
        n: 3,
        refinement,
        vertices,
        cells,
        quad_rule: QuadRule::default(),
    }
}

/// Deterministic mesh of `B₁(0) ⊂ ℝⁿ`: concentric rings for `n = 2` (the
/// number of rings doubles per refinement), a refined octahedron pushed onto
/// the sphere for `n = 3`.
pub fn build_ball_mesh(n: usize, refinement: usize) -> Result<BallMesh, FemError> {
    if refinement > 10 {
        return Err(FemError::InvalidInput(format!("refinement {refinement} too large")));
    }
    let mut mesh = match n {
        2 => disk_mesh(refinement),
        3 => ball_mesh_3d(refinement),
        _ => return Err(FemError::UnsupportedDimension(n)),
    };
    mesh.orient();
    Ok(mesh)
}
