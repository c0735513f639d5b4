//! Admissible manifolds: zero sets of level functions that every flowline
//! crosses in one direction only.
//!
//! A manifold is stored as its level function `f_M` together with a box that
//! contains the zero set. The flow must cross from `{f_M < 0}` into
//! `{f_M > 0}`; [`check_admissible`] finds out which sign of the user's
//! function achieves that and [`Manifold::oriented`] applies it.

mod tracing;

pub use tracing::{
    clamp, key_estimate_bound, tracing_from_equilibrium, tracing_from_manifold, KeyEstimate, TraceFn, TracingFunction,
    TracingOptions,
};

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::ScalarFn;
use crate::error::{Error, Result};
use crate::fields::{double_well_potential, run_flow, FlowField, FnField, IntegratorOptions, Monomial, StopReason, StopRules};
use crate::space::{gradient_fd, random_unit, BoundingBox, Vector};

/// Angle tolerance for the crossing condition `⟨∇f_M, b⟩ > tol·|∇f_M||b|`.
pub const TOL_ANGLE: f64 = 1e-6;
/// Residual to which zero-set points are refined.
pub const TOL_ZERO: f64 = 1e-10;
const RAY_SAMPLES: usize = 64;
const LEVEL_STEP: f64 = 1e-6;

pub type GradientFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

#[derive(Clone)]
pub struct Manifold {
    pub name: String,
    level: ScalarFn,
    gradient: Option<GradientFn>,
    pub bbox: BoundingBox,
    /// `+1` or `−1`, multiplied into the level function.
    pub orientation: f64,
}

impl fmt::Debug for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Manifold")
            .field("name", &self.name)
            .field("bbox", &self.bbox)
            .field("orientation", &self.orientation)
            .finish_non_exhaustive()
    }
}

impl Manifold {
    pub fn new<F>(name: impl Into<String>, bbox: BoundingBox, level: F) -> Self
    where
        F: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            level: Arc::new(level),
            gradient: None,
            bbox,
            orientation: 1.0,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// The same zero set with orientation `sign` (`±1`).
    pub fn oriented(mut self, sign: f64) -> Self {
        self.orientation = if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    /// The user's level function, without orientation.
    pub fn raw_level(&self, x: &Vector) -> f64 {
        (self.level)(x)
    }

    pub fn raw_gradient(&self, x: &Vector) -> Vector {
        match &self.gradient {
            Some(g) => g(x),
            None => gradient_fd(|z| (self.level)(z), x, LEVEL_STEP),
        }
    }

    /// Oriented level function `f_M`.
    pub fn value(&self, x: &Vector) -> f64 {
        self.orientation * (self.level)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.raw_gradient(x) * self.orientation
    }
}

/// Scalar potentials usable in `level_of_potential` manifolds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// `(x²−1)²/4 + y²/2`.
    DoubleWell,
    /// `x⁶/2 − x⁴ + x²/2 + y²/2`, whose negative gradient is the three-basin field.
    ThreeBasin,
    /// `|x|²/2`.
    Quadratic,
    Polynomial { terms: Vec<Monomial> },
}

impl Potential {
    pub fn eval(&self, x: &Vector) -> f64 {
        match self {
            Self::DoubleWell => double_well_potential(x),
            Self::ThreeBasin => {
                let u = x[0] * x[0];
                0.5 * u * u * u - u * u + 0.5 * u + 0.5 * x[1] * x[1]
            }
            Self::Quadratic => 0.5 * x.norm_squared(),
            Self::Polynomial { terms } => terms.iter().map(|m| m.eval(x)).sum(),
        }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        match self {
            Self::DoubleWell => Vector::from_vec(vec![x[0] * x[0] * x[0] - x[0], x[1]]),
            Self::ThreeBasin => {
                let u = x[0];
                Vector::from_vec(vec![3.0 * u.powi(5) - 4.0 * u.powi(3) + u, x[1]])
            }
            Self::Quadratic => x.clone(),
            Self::Polynomial { terms } => {
                Vector::from_iterator(x.len(), (0..x.len()).map(|k| terms.iter().map(|m| m.partial(x, k)).sum()))
            }
        }
    }

    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Self::DoubleWell | Self::ThreeBasin => Some(2),
            Self::Quadratic => None,
            Self::Polynomial { terms } => terms.first().map(|m| m.powers.len()),
        }
    }
}

/// Named level-function primitives for scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `|x − center|² − radius²`.
    Sphere { center: Vec<f64>, radius: f64 },
    /// `level − V(x)`.
    LevelOfPotential { potential: Potential, level: f64 },
    /// `⟨normal, x⟩ − offset`.
    Hyperplane { normal: Vec<f64>, offset: f64 },
    /// Sum of monomials.
    Polynomial { terms: Vec<Monomial> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub shape: Shape,
    /// Box containing the zero set; defaults to the sphere's own box or to
    /// the scenario box.
    #[serde(default)]
    pub bbox: Option<BoundingBox>,
    /// Fixes the orientation instead of letting the checker resolve it.
    #[serde(default)]
    pub orientation: Option<f64>,
}

impl ManifoldConfig {
    pub fn build(&self, dim: usize, fallback: &BoundingBox) -> Result<Manifold> {
        let name = self.name.clone().unwrap_or_else(|| self.default_name());
        let bbox = match (&self.bbox, &self.shape) {
            (Some(b), _) => BoundingBox::new(b.lo.clone(), b.hi.clone())?,
            (None, Shape::Sphere { center, radius }) => {
                BoundingBox::around(&Vector::from_column_slice(center), 1.25 * radius.abs())
            }
            (None, _) => fallback.clone(),
        };
        if bbox.dim() != dim {
            return Err(Error::Config(format!(
                "manifold '{name}' has a {}-dimensional box in a {dim}-dimensional scenario",
                bbox.dim()
            )));
        }
        let m = match self.shape.clone() {
            Shape::Sphere { center, radius } => {
                if center.len() != dim || !(radius > 0.0) {
                    return Err(Error::Config(format!(
                        "sphere manifold '{name}' needs a {dim}-dimensional center and a positive radius"
                    )));
                }
                let c = Vector::from_vec(center);
                let c2 = c.clone();
                Manifold::new(name, bbox, move |x| (x - &c).norm_squared() - radius * radius)
                    .with_gradient(move |x| (x - &c2) * 2.0)
            }
            Shape::LevelOfPotential { potential, level } => {
                if potential.fixed_dim().is_some_and(|d| d != dim) {
                    return Err(Error::Config(format!("potential of manifold '{name}' does not match dimension {dim}")));
                }
                let p2 = potential.clone();
                Manifold::new(name, bbox, move |x| level - potential.eval(x)).with_gradient(move |x| -p2.gradient(x))
            }
            Shape::Hyperplane { normal, offset } => {
                let n = Vector::from_vec(normal);
                if n.len() != dim || n.norm() == 0.0 {
                    return Err(Error::Config(format!(
                        "hyperplane manifold '{name}' needs a nonzero {dim}-dimensional normal"
                    )));
                }
                let n2 = n.clone();
                Manifold::new(name, bbox, move |x| n.dot(x) - offset).with_gradient(move |_| n2.clone())
            }
            Shape::Polynomial { terms } => {
                if terms.is_empty() || terms.iter().any(|m| m.powers.len() != dim) {
                    return Err(Error::Config(format!(
                        "polynomial manifold '{name}' needs monomials with {dim} powers"
                    )));
                }
                let t2 = terms.clone();
                Manifold::new(name, bbox, move |x| terms.iter().map(|m| m.eval(x)).sum()).with_gradient(move |x| {
                    Vector::from_iterator(x.len(), (0..x.len()).map(|k| t2.iter().map(|m| m.partial(x, k)).sum()))
                })
            }
        };
        Ok(match self.orientation {
            Some(o) => m.oriented(o),
            None => m,
        })
    }

    fn default_name(&self) -> String {
        match &self.shape {
            Shape::Sphere { .. } => "sphere",
            Shape::LevelOfPotential { .. } => "level_of_potential",
            Shape::Hyperplane { .. } => "hyperplane",
            Shape::Polynomial { .. } => "polynomial",
        }
        .to_string()
    }
}

/// Outcome of [`check_admissible`].
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub pass: bool,
    /// Orientation under which the crossing condition holds (or the better
    /// of the two when neither does).
    pub orientation: f64,
    pub zero_points: usize,
    /// Smallest oriented `⟨∇f_M, b⟩ / (|∇f_M||b|)` over the zero points.
    pub min_cosine: f64,
    #[serde(serialize_with = "crate::space::ser_opt_vec")]
    pub worst_point: Option<Vector>,
    /// Two zero points crossed in opposite directions, when they exist.
    pub sign_flip_pair: Option<(Vec<f64>, Vec<f64>)>,
    /// Whether `f_M` keeps one sign on the box boundary, i.e. the zero set
    /// closes up inside the box. Informational only: hyperplanes clipped by
    /// the box never close up.
    pub closed_in_box: bool,
}

fn ray_exit(bbox: &BoundingBox, origin: &Vector, dir: &Vector) -> f64 {
    let mut t = f64::INFINITY;
    for k in 0..origin.len() {
        if dir[k] > 0.0 {
            t = t.min((bbox.hi[k] - origin[k]) / dir[k]);
        } else if dir[k] < 0.0 {
            t = t.min((bbox.lo[k] - origin[k]) / dir[k]);
        }
    }
    t.max(0.0)
}

fn bisect_zero(level: &dyn Fn(&Vector) -> f64, mut a: Vector, mut fa: f64, mut b: Vector) -> Vector {
    for _ in 0..200 {
        let m = (&a + &b) * 0.5;
        let fm = level(&m);
        if fm == 0.0 || (&b - &a).norm() < 1e-15 * (1.0 + m.norm()) {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    (a + b) * 0.5
}

/// Zero-set points of `m` found by bisection along `rays` random rays
/// inside its box. Half the rays start at the box center, the rest at random
/// points of the box.
pub fn zero_points(m: &Manifold, rays: usize, seed: u64) -> Vec<Vector> {
    let n = m.dim();
    let mut rng = crate::rng(seed);
    let center = m.bbox.center();
    let starts: Vec<(Vector, Vector)> = (0..rays)
        .map(|i| {
            let origin = if i % 2 == 0 { center.clone() } else { m.bbox.sample(&mut rng) };
            (origin, random_unit(n, &mut rng))
        })
        .collect();
    let level = |x: &Vector| m.raw_level(x);
    starts
        .par_iter()
        .flat_map_iter(|(origin, dir)| {
            let len = ray_exit(&m.bbox, origin, dir);
            let pts: Vec<(Vector, f64)> = (0..=RAY_SAMPLES)
                .map(|j| {
                    let x = origin + dir * (len * j as f64 / RAY_SAMPLES as f64);
                    let v = level(&x);
                    (x, v)
                })
                .collect();
            let mut found = Vec::new();
            for w in pts.windows(2) {
                let ((xa, fa), (xb, fb)) = (&w[0], &w[1]);
                if !fa.is_finite() || !fb.is_finite() {
                    continue;
                }
                if *fa == 0.0 {
                    found.push(xa.clone());
                } else if (*fa > 0.0) != (*fb > 0.0) && *fb != 0.0 {
                    found.push(bisect_zero(&level, xa.clone(), *fa, xb.clone()));
                }
            }
            found
        })
        .collect()
}

fn boundary_has_one_sign(m: &Manifold, seed: u64) -> bool {
    let n = m.dim();
    let mut rng = crate::rng(seed ^ 0x5eed);
    let mut sign = 0.0;
    for i in 0..(256 * n) {
        let mut x = m.bbox.sample(&mut rng);
        let k = i % n;
        x[k] = if rng.random::<bool>() { m.bbox.hi[k] } else { m.bbox.lo[k] };
        let v = m.raw_level(&x);
        if v == 0.0 || !v.is_finite() {
            return false;
        }
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            return false;
        }
    }
    true
}

/// Checks the crossing condition of an admissible manifold on sampled
/// zero-set points, trying both orientations of the level function.
pub fn check_admissible(m: &Manifold, field: &dyn FlowField, samples: usize, seed: u64) -> Result<AdmissibilityReport> {
    if samples == 0 {
        return Err(Error::Config("check_admissible needs at least one sample".into()));
    }
    if field.dim() != m.dim() {
        return Err(Error::Config(format!(
            "manifold '{}' is {}-dimensional but the field is {}-dimensional",
            m.name,
            m.dim(),
            field.dim()
        )));
    }
    let points = zero_points(m, samples, seed);
    if points.is_empty() {
        return Err(Error::EmptyManifold);
    }
    let cosines: Vec<f64> = points
        .par_iter()
        .map(|x| {
            let g = m.raw_gradient(x);
            let b = field.drift(x);
            let denom = g.norm() * b.norm();
            if denom > 0.0 && denom.is_finite() {
                g.dot(&b) / denom
            } else {
                0.0
            }
        })
        .collect();
    let (mut i_min, mut i_max) = (0, 0);
    for (i, c) in cosines.iter().enumerate() {
        if *c < cosines[i_min] {
            i_min = i;
        }
        if *c > cosines[i_max] {
            i_max = i;
        }
    }
    let (lo, hi) = (cosines[i_min], cosines[i_max]);
    let (orientation, min_cosine, worst) = if lo > TOL_ANGLE || (hi >= -lo && !(hi < -TOL_ANGLE)) {
        (1.0, lo, i_min)
    } else {
        (-1.0, -hi, i_max)
    };
    let sign_flip_pair = (lo < -TOL_ANGLE && hi > TOL_ANGLE).then(|| {
        (
            points[i_max].iter().copied().collect(),
            points[i_min].iter().copied().collect(),
        )
    });
    Ok(AdmissibilityReport {
        pass: min_cosine > TOL_ANGLE,
        orientation,
        zero_points: points.len(),
        min_cosine,
        worst_point: Some(points[worst].clone()),
        sign_flip_pair,
        closed_in_box: boundary_has_one_sign(m, seed),
    })
}

/// Runs [`check_admissible`] and returns the manifold with the orientation
/// that passes, or a precondition error naming the failure.
pub fn resolve_orientation(m: &Manifold, field: &dyn FlowField, samples: usize, seed: u64) -> Result<(Manifold, AdmissibilityReport)> {
    let report = check_admissible(m, field, samples, seed)?;
    if !report.pass {
        return Err(Error::Precondition(format!(
            "manifold '{}' is not admissible: min crossing cosine {:.3e} at {:?}",
            m.name,
            report.min_cosine,
            report.worst_point.as_ref().map(|p| p.as_slice().to_vec())
        )));
    }
    Ok((m.clone().oriented(report.orientation), report))
}

/// `z(x)` and `t(x)` with `ψ(z, t) = x` and `z` on the manifold.
#[derive(Clone, Debug, Serialize)]
pub struct FlowCoordinates {
    #[serde(serialize_with = "crate::space::ser_vec")]
    pub z: Vector,
    pub t: f64,
    /// Arclength of the flowline piece between `z` and `x`.
    pub arclength: f64,
}

pub(crate) fn crossing_rules<'a>(event: &'a (dyn Fn(&Vector) -> f64 + 'a), arc_limit: Option<f64>) -> StopRules<'a> {
    StopRules {
        event: Some(event),
        arc_limit,
        stall_speed: 1e-14,
        record: false,
    }
}

/// Follows the flowline through `x` until it meets the manifold. The
/// direction suggested by the orientation is tried first and the other one
/// second, so the result does not depend on the orientation being resolved.
pub fn flow_coordinates(m: &Manifold, field: &dyn FlowField, x: &Vector, t_max: f64, opts: &IntegratorOptions) -> Result<FlowCoordinates> {
    let v = m.value(x);
    if v == 0.0 {
        return Ok(FlowCoordinates {
            z: x.clone(),
            t: 0.0,
            arclength: 0.0,
        });
    }
    let level = |y: &Vector| m.raw_level(y);
    let first = if v > 0.0 { -1.0 } else { 1.0 };
    for dir in [first, -first] {
        let rules = crossing_rules(&level, None);
        let run = match run_flow(field, x, dir * t_max, opts, &rules) {
            Ok(run) => run,
            Err(Error::Divergence { .. }) => continue,
            Err(e) => return Err(e),
        };
        if run.stop == StopReason::Event {
            return Ok(FlowCoordinates {
                z: run.state,
                t: -run.time,
                arclength: run.arclength,
            });
        }
    }
    Err(Error::NotReachable { t_max })
}

/// Moves the manifold along the flow of `β·b` for time `t`: the new level
/// function is `x ↦ f_M(ψ_β(x, −t))`. The result is re-checked.
pub fn evolve_manifold(
    m: &Manifold,
    field: Arc<dyn FlowField>,
    beta: ScalarFn,
    t: f64,
    opts: &IntegratorOptions,
    samples: usize,
    seed: u64,
) -> Result<(Manifold, AdmissibilityReport)> {
    let n = m.dim();
    let scaled = {
        let field = field.clone();
        let beta = beta.clone();
        Arc::new(FnField::new(n, move |x: &Vector| field.drift(x) * beta(x)))
    };
    // Transport the zero set to size the new box.
    let moved: Vec<Vector> = zero_points(m, samples.max(8), seed)
        .par_iter()
        .map(|z| crate::fields::flow(scaled.as_ref(), z, t, opts))
        .collect::<Result<_>>()?;
    let bbox = match BoundingBox::bounding(&moved) {
        Some(b) => {
            let pad = 0.1 * b.diameter().max(m.bbox.diameter() * 0.05) + 1e-6;
            b.expanded(pad)
        }
        None => return Err(Error::EmptyManifold),
    };
    let old = m.clone();
    let back = opts.clone();
    let level = move |x: &Vector| match crate::fields::flow(scaled.as_ref(), x, -t, &back) {
        Ok(y) => old.raw_level(&y),
        Err(_) => f64::NAN,
    };
    let evolved = Manifold::new(format!("{}@{t}", m.name), bbox, level).oriented(m.orientation);
    let report = check_admissible(&evolved, field.as_ref(), samples, seed)?;
    Ok((evolved, report))
}
