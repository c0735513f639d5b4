//! Scenario files: a drift field, an action, manifolds, a minimization
//! problem and the settings of the checks, in TOML or JSON.
//!
//! ```toml
//! name = "double_well"
//! domain = { lo = [-2.0, -2.0], hi = [2.0, 2.0] }
//!
//! [field]
//! kind = "double_well"
//!
//! [action]
//! kind = "sde_randers"
//!
//! [problem]
//! start = { kind = "point", x = [-1.0, 0.0] }
//! end = { kind = "point", x = [1.0, 0.0] }
//! nodes = 200
//! ```
//!
//! Unknown keys are rejected everywhere. Syntax errors carry the line
//! number; inconsistent dimensions and missing sections are configuration
//! errors.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::actions::{LocalAction, MarkovJumpHamiltonian, Rate};
use crate::criteria::ClassifyOptions;
use crate::error::{Error, Result};
use crate::fields::{BuiltinField, FlowField, SharedField};
use crate::manifolds::{Manifold, ManifoldConfig, Potential};
use crate::minimizer::{EndpointSet, MinimizeProblem, SolverOptions};
use crate::space::{BoundingBox, GridSpec, Matrix, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSpec {
    /// `|b||y| − ⟨b, y⟩` with the scenario field as drift.
    SdeRanders,
    /// SDE action with a constant diffusion matrix.
    SdeGeneral { diffusion: Vec<Vec<f64>> },
    /// Constant metric; the identity when omitted.
    Riemannian {
        #[serde(default)]
        metric: Option<Vec<Vec<f64>>>,
    },
    Agmon { potential: Potential },
    /// Jump process with the given jump vectors and rates.
    MarkovJump { jumps: Vec<Vec<f64>>, rates: Vec<Rate> },
    /// One-species chain: birth at rate `birth`, death at rate `death·x`.
    BirthDeath {
        #[serde(default = "one")]
        birth: f64,
        #[serde(default = "one")]
        death: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn matrix(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<Matrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Config(format!("{what} must be a {dim}x{dim} matrix")));
    }
    Ok(Matrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

impl ActionSpec {
    pub fn build(&self, field: &SharedField) -> Result<LocalAction> {
        let dim = field.dim();
        Ok(match self {
            Self::SdeRanders => LocalAction::sde_randers(field.clone()),
            Self::SdeGeneral { diffusion } => {
                let a = matrix(diffusion, dim, "diffusion")?;
                if a.clone().cholesky().is_none() {
                    return Err(Error::Config("diffusion must be symmetric positive definite".into()));
                }
                LocalAction::SdeGeneral {
                    drift: field.clone(),
                    diffusion: Arc::new(move |_: &Vector| a.clone()),
                }
            }
            Self::Riemannian { metric } => {
                let a = match metric {
                    Some(rows) => matrix(rows, dim, "metric")?,
                    None => Matrix::identity(dim, dim),
                };
                LocalAction::Riemannian {
                    dim,
                    metric: Arc::new(move |_: &Vector| a.clone()),
                }
            }
            Self::Agmon { potential } => {
                if potential.fixed_dim().is_some_and(|d| d != dim) {
                    return Err(Error::Config(format!("agmon potential does not match dimension {dim}")));
                }
                let p = potential.clone();
                LocalAction::Agmon {
                    dim,
                    potential: Arc::new(move |x: &Vector| p.eval(x)),
                }
            }
            Self::MarkovJump { jumps, rates } => {
                if jumps.is_empty() || jumps.len() != rates.len() {
                    return Err(Error::Config("markov_jump needs one rate per jump vector".into()));
                }
                if jumps.iter().any(|j| j.len() != dim) {
                    return Err(Error::Config(format!("jump vectors must have dimension {dim}")));
                }
                if rates.iter().any(|r| r.max_component().is_some_and(|k| k >= dim)) {
                    return Err(Error::Config(format!("a rate refers to a coordinate beyond dimension {dim}")));
                }
                let h = MarkovJumpHamiltonian::new(jumps.iter().map(|j| Vector::from_column_slice(j)).collect(), rates.clone());
                LocalAction::from_hamiltonian(Arc::new(h), true)
            }
            Self::BirthDeath { birth, death } => {
                if dim != 1 {
                    return Err(Error::Config(format!("birth_death is one-dimensional, the field has dimension {dim}")));
                }
                LocalAction::from_hamiltonian(Arc::new(MarkovJumpHamiltonian::birth_death(*birth, *death)), true)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EndpointSpec {
    Point { x: Vec<f64> },
    Sphere { center: Vec<f64>, radius: f64 },
    /// Zero set of a manifold of the scenario, by name.
    Manifold { name: String },
}

fn defaults() -> SolverOptions {
    SolverOptions::default()
}

fn default_nodes() -> usize {
    defaults().nodes
}
fn default_max_iters() -> usize {
    defaults().max_iters
}
fn default_step0() -> f64 {
    defaults().step0
}
fn default_tol_s() -> f64 {
    defaults().tol_s
}
fn default_smoothing() -> f64 {
    defaults().smoothing
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub start: EndpointSpec,
    pub end: EndpointSpec,
    /// Confinement box; the scenario domain when omitted.
    #[serde(default)]
    pub bbox: Option<BoundingBox>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_step0")]
    pub step0: f64,
    #[serde(default = "default_tol_s")]
    pub tol_s: f64,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    /// Route the initial curve through the nearest saddle of the field.
    #[serde(default = "yes")]
    pub seed_through_saddle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaSpec {
    /// Grid points per axis over the grid box.
    #[serde(default)]
    pub grid: Option<Vec<usize>>,
    /// The scenario domain when omitted.
    #[serde(default)]
    pub grid_box: Option<BoundingBox>,
    /// Extra points classified after the grid.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    /// Points sampled along every detected cycle.
    #[serde(default)]
    pub cycle_samples: usize,
    #[serde(default)]
    pub options: ClassifyOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowlineSuite {
    pub start: Vec<f64>,
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-6
}
fn default_samples() -> usize {
    10_000
}
fn default_grid() -> usize {
    21
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftBoundSuite {
    /// Region of the sampled base points; the domain when omitted.
    #[serde(default)]
    pub bbox: Option<BoundingBox>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Grid points per axis for the drift constant.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_polylines() -> usize {
    100
}
fn default_polyline_nodes() -> usize {
    12
}
fn default_tracing_samples() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyEstimateSuite {
    /// Manifold the tracing function is built from.
    pub manifold: String,
    pub eps: f64,
    #[serde(default = "default_polylines")]
    pub polylines: usize,
    #[serde(default = "default_polyline_nodes")]
    pub nodes: usize,
    /// Region the polyline nodes are drawn from; the domain when omitted.
    #[serde(default)]
    pub region: Option<BoundingBox>,
    #[serde(default = "default_tracing_samples")]
    pub tracing_samples: usize,
}

fn default_segments() -> usize {
    20
}
fn default_min_drift() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentSuite {
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default)]
    pub bbox: Option<BoundingBox>,
    /// Ends where `|b|` is below this are redrawn.
    #[serde(default = "default_min_drift")]
    pub min_drift: f64,
    #[serde(default)]
    pub alpha0: f64,
}

fn default_pass_tol() -> f64 {
    0.05
}
fn default_downhill() -> f64 {
    1e-3
}
fn default_arc_budget() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HittingSuite {
    #[serde(default = "default_pass_tol")]
    pub pass_tol: f64,
    /// Node distance that counts as touching the separatrix; twice the
    /// node spacing of the minimizer when omitted.
    #[serde(default)]
    pub dist_tol: Option<f64>,
    /// Largest allowed ratio of the action after the last hitting point to
    /// the total.
    #[serde(default = "default_downhill")]
    pub downhill_ratio: f64,
    #[serde(default = "default_arc_budget")]
    pub arc_budget: f64,
}

fn default_admissibility_samples() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilitySuite {
    /// Manifolds expected to fail the crossing condition.
    #[serde(default)]
    pub expect_reject: Vec<String>,
    #[serde(default = "default_admissibility_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default)]
    pub flowline: Option<FlowlineSuite>,
    #[serde(default)]
    pub drift_bound: Option<DriftBoundSuite>,
    #[serde(default)]
    pub key_estimate: Option<KeyEstimateSuite>,
    #[serde(default)]
    pub descent: Option<DescentSuite>,
    #[serde(default)]
    pub hitting: Option<HittingSuite>,
    #[serde(default)]
    pub admissibility: Option<AdmissibilitySuite>,
}

/// The file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub domain: Option<BoundingBox>,
    #[serde(default)]
    pub field: Option<BuiltinField>,
    #[serde(default)]
    pub action: Option<ActionSpec>,
    #[serde(default)]
    pub manifolds: Vec<ManifoldConfig>,
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub criteria: Option<CriteriaSpec>,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
}

/// A checked scenario with its field, action and manifolds built.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub spec: ScenarioFile,
    pub domain: BoundingBox,
    pub field: SharedField,
    pub action: LocalAction,
    pub manifolds: Vec<Manifold>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("action", &self.action)
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_str(text: &str, format: Format) -> Result<ScenarioFile> {
    match format {
        Format::Toml => toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        }),
        Format::Json => serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        }),
    }
}

/// Reads and builds a scenario; `.json` files are JSON, anything else TOML.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Toml,
    };
    let mut spec = parse_str(&text, format)?;
    if spec.name.is_none() {
        spec.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    Scenario::build(spec)
}

fn check_len(v: &[f64], dim: usize, what: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Config(format!("{what} has dimension {}, the field has {dim}", v.len())));
    }
    Ok(())
}

fn check_box(b: &BoundingBox, dim: usize, what: &str) -> Result<BoundingBox> {
    let b = BoundingBox::new(b.lo.clone(), b.hi.clone())?;
    if b.dim() != dim {
        return Err(Error::Config(format!("{what} has dimension {}, the field has {dim}", b.dim())));
    }
    Ok(b)
}

impl Scenario {
    pub fn build(spec: ScenarioFile) -> Result<Self> {
        let field_spec = spec.field.clone().ok_or_else(|| Error::Config("missing [field] section".into()))?;
        let action_spec = spec.action.clone().ok_or_else(|| Error::Config("missing [action] section".into()))?;
        let domain_spec = spec.domain.clone().ok_or_else(|| Error::Config("missing domain box".into()))?;
        field_spec.validate()?;
        let field: SharedField = Arc::new(field_spec);
        let dim = field.dim();
        let domain = check_box(&domain_spec, dim, "domain")?;
        let action = action_spec.build(&field)?;
        if action.dim() != dim {
            return Err(Error::Config(format!("action has dimension {}, the field has {dim}", action.dim())));
        }
        if let (LocalAction::Hamiltonian { .. }, Some(d)) = (&action, action.drift()) {
            let probes = GridSpec::uniform(&domain, 3).points();
            let gap = probes
                .iter()
                .map(|x| (d.drift(x) - field.drift(x)).norm())
                .fold(0.0, f64::max);
            if gap > 1e-9 {
                return Err(Error::Config(format!(
                    "the field differs from the action's natural drift by up to {gap:.3e}"
                )));
            }
        }
        let manifolds = spec
            .manifolds
            .iter()
            .map(|m| m.build(dim, &domain))
            .collect::<Result<Vec<_>>>()?;
        for (i, m) in manifolds.iter().enumerate() {
            if manifolds[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::Config(format!("duplicate manifold name '{}'", m.name)));
            }
        }
        let s = Self {
            name: spec.name.clone().unwrap_or_else(|| "scenario".into()),
            spec,
            domain,
            field,
            action,
            manifolds,
        };
        s.check_sections()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    fn manifold(&self, name: &str) -> Result<&Manifold> {
        self.manifolds
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::Config(format!("no manifold named '{name}'")))
    }

    fn check_sections(&self) -> Result<()> {
        let dim = self.dim();
        if let Some(p) = &self.spec.problem {
            for (e, what) in [(&p.start, "problem start"), (&p.end, "problem end")] {
                match e {
                    EndpointSpec::Point { x } => check_len(x, dim, what)?,
                    EndpointSpec::Sphere { center, radius } => {
                        check_len(center, dim, what)?;
                        if !(*radius > 0.0) {
                            return Err(Error::Config(format!("{what} sphere needs a positive radius")));
                        }
                    }
                    EndpointSpec::Manifold { name } => {
                        self.manifold(name)?;
                    }
                }
            }
            if let Some(b) = &p.bbox {
                check_box(b, dim, "problem box")?;
            }
            self.problem(None)?.map(|q| q.validate()).transpose()?;
        }
        if let Some(c) = &self.spec.criteria {
            if let Some(g) = &c.grid {
                if g.len() != dim || g.contains(&0) {
                    return Err(Error::Config(format!("criteria grid needs {dim} positive counts")));
                }
            }
            if let Some(b) = &c.grid_box {
                check_box(b, dim, "criteria grid box")?;
            }
            for p in &c.points {
                check_len(p, dim, "criteria point")?;
            }
            for p in &c.options.cycle_seeds {
                check_len(p, dim, "cycle seed")?;
            }
        }
        if let Some(v) = &self.spec.verify {
            if let Some(f) = &v.flowline {
                check_len(&f.start, dim, "flowline start")?;
            }
            if let Some(b) = v.drift_bound.as_ref().and_then(|d| d.bbox.as_ref()) {
                check_box(b, dim, "drift bound box")?;
            }
            if let Some(k) = &v.key_estimate {
                self.manifold(&k.manifold)?;
                if !(k.eps > 0.0) || k.nodes < 2 {
                    return Err(Error::Config("key estimate needs eps > 0 and at least 2 nodes".into()));
                }
                if let Some(b) = &k.region {
                    check_box(b, dim, "key estimate region")?;
                }
            }
            if let Some(b) = v.descent.as_ref().and_then(|d| d.bbox.as_ref()) {
                check_box(b, dim, "descent box")?;
            }
            if let Some(a) = &v.admissibility {
                for n in &a.expect_reject {
                    self.manifold(n)?;
                }
            }
            if v.hitting.is_some() && self.spec.problem.is_none() {
                return Err(Error::Config("the hitting suite needs a [problem] section".into()));
            }
        }
        Ok(())
    }

    fn endpoint(&self, e: &EndpointSpec) -> Result<EndpointSet> {
        Ok(match e {
            EndpointSpec::Point { x } => EndpointSet::Point(Vector::from_column_slice(x)),
            EndpointSpec::Sphere { center, radius } => EndpointSet::Sphere {
                center: Vector::from_column_slice(center),
                radius: *radius,
            },
            EndpointSpec::Manifold { name } => EndpointSet::Level(self.manifold(name)?.clone()),
        })
    }

    /// The minimization problem, with optional overrides for nodes, seed and
    /// tolerance.
    pub fn problem(&self, overrides: Option<&Overrides>) -> Result<Option<MinimizeProblem>> {
        let Some(p) = &self.spec.problem else {
            return Ok(None);
        };
        let o = overrides.cloned().unwrap_or_default();
        let bbox = match &p.bbox {
            Some(b) => check_box(b, self.dim(), "problem box")?,
            None => self.domain.clone(),
        };
        Ok(Some(MinimizeProblem {
            action: self.action.clone(),
            start: self.endpoint(&p.start)?,
            end: self.endpoint(&p.end)?,
            bbox,
            opts: SolverOptions {
                nodes: o.nodes.unwrap_or(p.nodes),
                max_iters: p.max_iters,
                step0: p.step0,
                tol_s: o.tol.unwrap_or(p.tol_s),
                smoothing: p.smoothing,
                seed: o.seed.unwrap_or(self.spec.seed),
            },
        }))
    }
}

/// Command-line overrides of scenario values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub nodes: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}
