use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::elastic_fem::{OptimizerConfig, SweepConfig};
use crate::limit_solver::{QSearchConfig, DEFAULT_DEGREE, MAX_DEGREE};
use crate::space_forms::SpaceForm;
use crate::tensor_core::CurvatureTensor;

use super::CliError;

/// Largest mesh refinement accepted from a config.
pub const MAX_MESH_REFINEMENT: usize = 7;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ManifoldSpec {
    Euclidean {},
    Sphere { curvature: f64 },
    Hyperbolic { curvature: f64 },
    /// Quadratic metric model from `n⁴` components `A_{ijkl}`, row-major.
    Synthetic { components: Vec<f64> },
}

impl ManifoldSpec {
    pub fn build(&self, n: usize) -> Result<SpaceForm, CliError> {
        let sf = match self {
            ManifoldSpec::Euclidean {} => SpaceForm::euclidean(n),
            ManifoldSpec::Sphere { curvature } => SpaceForm::sphere(*curvature, n),
            ManifoldSpec::Hyperbolic { curvature } => SpaceForm::hyperbolic(*curvature, n),
            ManifoldSpec::Synthetic { components } => {
                if components.len() != n.pow(4) {
                    return Err(CliError::Config(format!(
                        "synthetic manifold needs {} components, got {}",
                        n.pow(4),
                        components.len()
                    )));
                }
                let t = CurvatureTensor::from_components(n, components.clone(), true)
                    .map_err(|e| CliError::Config(format!("synthetic manifold: {e}")))?;
                SpaceForm::synthetic(t)
            }
        };
        sf.map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QSearchSpec {
    pub grid_size: u64,
    pub tol: f64,
    pub seeds: u64,
}

impl Default for QSearchSpec {
    fn default() -> Self {
        let d = QSearchConfig::default();
        Self {
            grid_size: d.grid_size as u64,
            tol: d.tol,
            seeds: d.seeds as u64,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSpec {
    pub max_iters: u64,
    pub grad_tol: Option<f64>,
    pub restarts: u64,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            max_iters: d.max_iters as u64,
            grad_tol: d.grad_tol,
            restarts: d.restarts as u64,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSpec {
    /// Random triples for the perturbed-distance inequality.
    pub samples: u64,
    /// Flip the sign of the curvature term in the comparison metric (mutation test).
    pub flip_curvature_sign: bool,
}

impl Default for CheckSpec {
    fn default() -> Self {
        Self {
            samples: 10_000,
            flip_curvature_sign: false,
        }
    }
}

fn default_h_list() -> Vec<f64> {
    vec![0.4, 0.28, 0.2, 0.14, 0.1]
}

fn default_mesh_refinement() -> u64 {
    2
}

fn default_max_refinement() -> u64 {
    5
}

fn default_degree() -> u64 {
    DEFAULT_DEGREE as u64
}

/// One experiment, read from a JSON document.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: u64,
    pub domain: ManifoldSpec,
    pub target: ManifoldSpec,
    #[serde(default = "default_h_list")]
    pub h_list: Vec<f64>,
    #[serde(default = "default_mesh_refinement")]
    pub mesh_refinement: u64,
    #[serde(default = "default_max_refinement")]
    pub max_refinement: u64,
    #[serde(default = "default_degree")]
    pub basis_degree: u64,
    #[serde(default)]
    pub q_search: QSearchSpec,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub check: CheckSpec,
}

/// Validated experiment with built manifolds.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub n: usize,
    pub domain: SpaceForm,
    pub target: SpaceForm,
    pub sweep: SweepConfig,
    pub check: CheckSpec,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

fn fail<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Range checks and manifold construction.
    pub fn validate(&self) -> Result<Experiment, CliError> {
        let n = match self.dimension {
            2 => 2,
            3 => 3,
            d => return fail(format!("dimension must be 2 or 3, got {d}")),
        };
        let domain = self.domain.build(n)?;
        let target = self.target.build(n)?;
        if self.h_list.is_empty() {
            return fail("h_list is empty");
        }
        if let Some(h) = self.h_list.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return fail(format!("h_list entries must be positive, got {h}"));
        }
        if self.h_list.windows(2).any(|w| !(w[0] > w[1])) {
            return fail("h_list must be strictly decreasing");
        }
        if self.max_refinement > MAX_MESH_REFINEMENT as u64 {
            return fail(format!("max_refinement must be at most {MAX_MESH_REFINEMENT}"));
        }
        if self.mesh_refinement > self.max_refinement {
            return fail("mesh_refinement exceeds max_refinement");
        }
        if !(1..=MAX_DEGREE as u64).contains(&self.basis_degree) {
            return fail(format!("basis_degree must lie in 1..={MAX_DEGREE}"));
        }
        let min_grid = QSearchConfig::min_grid_size(n) as u64;
        if self.q_search.grid_size < min_grid || self.q_search.grid_size > 1 << 20 {
            return fail(format!("q_search.grid_size must lie in {min_grid}..=1048576 for n = {n}"));
        }
        if !(self.q_search.tol > 0.0 && self.q_search.tol.is_finite()) {
            return fail("q_search.tol must be positive");
        }
        if self.q_search.seeds == 0 || self.q_search.seeds > self.q_search.grid_size {
            return fail("q_search.seeds must lie in 1..=grid_size");
        }
        if self.optimizer.max_iters == 0 || self.optimizer.max_iters > 1_000_000 {
            return fail("optimizer.max_iters must lie in 1..=1000000");
        }
        if let Some(t) = self.optimizer.grad_tol {
            if !(t > 0.0 && t.is_finite()) {
                return fail("optimizer.grad_tol must be positive");
            }
        }
        if self.optimizer.restarts > 16 {
            return fail("optimizer.restarts must be at most 16");
        }
        if self.check.samples == 0 || self.check.samples > 10_000_000 {
            return fail("check.samples must lie in 1..=10000000");
        }
        for (name, sf) in [("domain", &domain), ("target", &target)] {
            let h0 = self.h_list[0];
            if !(h0 < sf.chart_radius()) {
                return fail(format!(
                    "largest h = {h0} exceeds the {name} chart radius {}",
                    sf.chart_radius()
                ));
            }
        }
        let sweep = SweepConfig {
            h_list: self.h_list.clone(),
            mesh_refinement: self.mesh_refinement as usize,
            max_refinement: self.max_refinement as usize,
            basis_degree: self.basis_degree as usize,
            q_search: QSearchConfig {
                grid_size: self.q_search.grid_size as usize,
                tol: self.q_search.tol,
                seeds: self.q_search.seeds as usize,
                seed: self.seed,
            },
            optimizer: OptimizerConfig {
                max_iters: self.optimizer.max_iters as usize,
                grad_tol: self.optimizer.grad_tol,
                restarts: self.optimizer.restarts as usize,
                ..OptimizerConfig::default()
            },
            seed: self.seed,
            ..SweepConfig::default()
        };
        Ok(Experiment {
            n,
            domain,
            target,
            sweep,
            check: self.check.clone(),
            seed: self.seed,
            output_path: self.output_path.clone(),
        })
    }
}
