//! Scenario and space files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::analysis::{build_counterexample, Counterexample};
use crate::calculus::{BoundaryVariant, Field};
use crate::elliptic::SolverOptions;
use crate::kernel::{make_plaplacian, make_weighted_plaplacian, LerayLionsMap};
use crate::space::{
    build_graph_space, build_kernel_space, m_boundary, Domain, Grid, KernelProfile, Node, Space,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub edges: Vec<(Node, Node, f64)>,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub shape: Vec<usize>,
    pub h: f64,
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelParams {
    #[serde(default)]
    pub height: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub radius: f64,
    #[serde(default)]
    pub params: Option<KernelParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub grid: GridSpec,
    pub kernel: KernelSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SpaceFile {
    Graph(GraphFile),
    Kernel(KernelFile),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Builtin {
    pub builtin: String,
    pub levels: usize,
    pub p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SpaceSource {
    File(PathBuf),
    Builtin(Builtin),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApSpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub p: f64,
    #[serde(default)]
    pub phi: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSpec {
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub iterations: Option<usize>,
}

/// `{"constant": c, "3": v, ...}`: a default plus per-node overrides.
pub type FieldSpec = BTreeMap<String, f64>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub space: SpaceSource,
    #[serde(default)]
    pub omega: Option<Vec<Node>>,
    #[serde(default)]
    pub ap: Option<ApSpec>,
    #[serde(default)]
    pub variant: Option<BoundaryVariant>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub z: Option<FieldSpec>,
    #[serde(default)]
    pub flux: Option<FieldSpec>,
    #[serde(default)]
    pub u0: Option<FieldSpec>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default, rename = "T", alias = "horizon")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub solver: Option<SolverSpec>,
    #[serde(default)]
    pub poincare: Option<PoincareSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
}

impl Scenario {
    fn bare(path: &Path) -> Self {
        Self {
            space: SpaceSource::File(path.to_path_buf()),
            omega: None,
            ap: None,
            variant: None,
            lambda: None,
            z: None,
            flux: None,
            u0: None,
            dt: None,
            horizon: None,
            solver: None,
            poincare: None,
            seed: None,
            samples: None,
        }
    }
}

/// A scenario with its space built and its domain resolved.
pub struct Loaded {
    pub scenario: Scenario,
    pub space: Space,
    pub domain: Option<Domain>,
    pub counterexample: Option<Counterexample>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::config(msg)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

pub fn load_space_file(path: &Path) -> Result<Space, CliError> {
    match read_json::<SpaceFile>(path)? {
        SpaceFile::Graph(g) => {
            let space = build_graph_space(&g.edges)?;
            match g.labels {
                Some(l) => Ok(space.with_labels(l)?),
                None => Ok(space),
            }
        }
        SpaceFile::Kernel(k) => {
            if k.grid.dim != k.grid.shape.len() {
                return Err(config_err("grid dim disagrees with the length of shape"));
            }
            let origin = k.grid.origin.unwrap_or_else(|| vec![0.0; k.grid.dim]);
            let grid = Grid::new(origin, k.grid.h, k.grid.shape)?;
            let params = k.kernel.params.unwrap_or(KernelParams {
                height: None,
                sigma: None,
            });
            let height = params.height.unwrap_or(1.0);
            let profile = match k.kernel.kind.as_str() {
                "box" => KernelProfile::Box { height },
                "tent" => KernelProfile::Tent { height },
                "gauss_trunc" => KernelProfile::GaussTrunc {
                    sigma: params
                        .sigma
                        .ok_or_else(|| config_err("gauss_trunc kernel needs params.sigma"))?,
                    height,
                },
                other => return Err(config_err(format!("unknown kernel type {other:?}"))),
            };
            Ok(build_kernel_space(&grid, &profile, k.kernel.radius)?)
        }
    }
}

/// Loads a scenario, or a bare space file as a scenario with no domain.
pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let raw: serde_json::Value = read_json(path)?;
    if raw.get("space").is_none() {
        return Ok(Loaded {
            scenario: Scenario::bare(path),
            space: load_space_file(path)?,
            domain: None,
            counterexample: None,
        });
    }
    let scenario: Scenario =
        serde_json::from_value(raw).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (space, counterexample) = match &scenario.space {
        SpaceSource::File(file) => (load_space_file(&base.join(file))?, None),
        SpaceSource::Builtin(b) => {
            if b.builtin != "counterexample" {
                return Err(config_err(format!("unknown builtin space {:?}", b.builtin)));
            }
            let ce = build_counterexample(b.levels, b.p)?;
            (ce.space.clone(), Some(ce))
        }
    };
    let domain = match (&scenario.omega, &counterexample) {
        (Some(omega), _) => {
            if let Some(&x) = omega.iter().find(|&&x| x >= space.node_count()) {
                return Err(config_err(format!("omega node {x} is out of range")));
            }
            Some(m_boundary(&space, omega)?)
        }
        (None, Some(ce)) => Some(ce.domain.clone()),
        (None, None) => None,
    };
    Ok(Loaded {
        scenario,
        space,
        domain,
        counterexample,
    })
}

impl Loaded {
    pub fn domain(&self) -> Result<&Domain, CliError> {
        self.domain.as_ref().ok_or_else(|| config_err("scenario needs \"omega\""))
    }

    pub fn map(&self) -> Result<LerayLionsMap, CliError> {
        let ap = self
            .scenario
            .ap
            .as_ref()
            .ok_or_else(|| config_err("scenario needs \"ap\""))?;
        match ap.kind.as_str() {
            "plaplacian" => {
                if ap.phi.is_some() {
                    return Err(config_err("\"phi\" only applies to the weighted map"));
                }
                Ok(make_plaplacian(ap.p)?)
            }
            "weighted" => {
                let phi = ap
                    .phi
                    .clone()
                    .ok_or_else(|| config_err("weighted map needs \"phi\""))?;
                if phi.len() != self.space.node_count() {
                    return Err(config_err(format!(
                        "\"phi\" has {} entries for {} nodes",
                        phi.len(),
                        self.space.node_count()
                    )));
                }
                Ok(make_weighted_plaplacian(ap.p, phi)?)
            }
            other => Err(config_err(format!("unknown ap type {other:?}"))),
        }
    }

    pub fn variant(&self) -> Result<BoundaryVariant, CliError> {
        self.scenario
            .variant
            .ok_or_else(|| config_err("scenario needs \"variant\""))
    }

    pub fn lambda(&self) -> Result<f64, CliError> {
        self.scenario
            .lambda
            .ok_or_else(|| config_err("scenario needs \"lambda\""))
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.scenario
            .seed
            .ok_or_else(|| config_err("randomized runs need a \"seed\""))
    }

    pub fn solver(&self) -> SolverOptions {
        let mut opts = SolverOptions::default();
        if let Some(s) = &self.scenario.solver {
            if let Some(t) = s.tol {
                opts.tol = t;
            }
            if let Some(m) = s.max_iter {
                opts.max_iter = m;
            }
        }
        opts
    }

    /// Resolves a field spec on `support`; the counterexample supplies its
    /// own data when the key is absent.
    pub fn field(&self, name: &str, spec: Option<&FieldSpec>, support: &[Node]) -> Result<Field, CliError> {
        let spec = match spec {
            Some(s) => s,
            None => {
                if let Some(ce) = &self.counterexample {
                    match name {
                        "z" => return Ok(ce.v.clone()),
                        "flux" => return Ok(ce.flux.clone()),
                        "u0" => return Ok(ce.u.restrict(support)?),
                        _ => {}
                    }
                }
                return Err(config_err(format!("scenario needs \"{name}\"")));
            }
        };
        let default = spec.get("constant").copied();
        let mut values: BTreeMap<Node, f64> = BTreeMap::new();
        for (key, &v) in spec {
            if key == "constant" {
                continue;
            }
            let x: Node = key
                .parse()
                .map_err(|_| config_err(format!("\"{name}\": key {key:?} is neither a node nor \"constant\"")))?;
            if !support.contains(&x) {
                return Err(config_err(format!("\"{name}\": node {x} is outside the field's support")));
            }
            values.insert(x, v);
        }
        let mut pairs = Vec::with_capacity(support.len());
        for &x in support {
            let v = values
                .get(&x)
                .copied()
                .or(default)
                .ok_or_else(|| config_err(format!("\"{name}\" has no value for node {x}")))?;
            pairs.push((x, v));
        }
        Ok(Field::from_pairs(pairs)?)
    }
}
