//! Minimum action curves between two sets, and tools to probe them.
//!
//! The optimizer is a monotone descent on the discretized action: a finite
//! difference gradient with its tangential part removed, smoothed by an
//! `H¹`-type preconditioner, a halving line search, and arclength
//! redistribution of the nodes after every step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::LocalAction;
use crate::curves::{concat, reparameterize_arclength, ArcCurve, Curve};
use crate::error::{Error, Result};
use crate::fields::{find_equilibria, EquilibriumKind, FlowField};
use crate::functional::geometric_action;
use crate::manifolds::Manifold;
use crate::space::{pairwise_sum, BoundingBox, GridSpec, Vector};

pub const MIN_NODES: usize = 16;
/// Iterations over which the relative decrease is measured.
pub const STALL_WINDOW: usize = 20;
const MAX_HALVINGS: usize = 60;

/// A start or end set of a minimization problem.
#[derive(Clone, Debug)]
pub enum EndpointSet {
    Point(Vector),
    Sphere { center: Vector, radius: f64 },
    /// Zero set of a level function.
    Level(Manifold),
}

impl EndpointSet {
    pub fn dim(&self) -> usize {
        match self {
            Self::Point(p) => p.len(),
            Self::Sphere { center, .. } => center.len(),
            Self::Level(m) => m.dim(),
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, Self::Point(_))
    }

    /// Nearest point of the set to `x` (exact for points and spheres, by
    /// Newton steps along the gradient for level sets).
    pub fn project(&self, x: &Vector) -> Vector {
        match self {
            Self::Point(p) => p.clone(),
            Self::Sphere { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n == 0.0 {
                    let mut e = Vector::zeros(x.len());
                    e[0] = *radius;
                    center + e
                } else {
                    center + d * (radius / n)
                }
            }
            Self::Level(m) => project_level(m, x),
        }
    }

    pub fn distance(&self, x: &Vector) -> f64 {
        (self.project(x) - x).norm()
    }

    /// A representative point: the set's point nearest to `toward`.
    pub fn representative(&self, toward: &Vector) -> Vector {
        self.project(toward)
    }

    fn anchor(&self) -> Vector {
        match self {
            Self::Point(p) => p.clone(),
            Self::Sphere { center, .. } => center.clone(),
            Self::Level(m) => m.bbox.center(),
        }
    }
}

fn project_level(m: &Manifold, x: &Vector) -> Vector {
    let mut y = x.clone();
    for _ in 0..60 {
        let v = m.raw_level(&y);
        if v.abs() < 1e-13 {
            break;
        }
        let g = m.raw_gradient(&y);
        let g2 = g.norm_squared();
        if g2 == 0.0 {
            // Critical point of the level function: nudge off it.
            y[0] += 1e-6 * (1.0 + y.norm());
            continue;
        }
        if !g2.is_finite() {
            break;
        }
        y -= g * (v / g2);
    }
    y
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub nodes: usize,
    pub max_iters: usize,
    /// Initial line-search step, as the largest node displacement.
    pub step0: f64,
    /// Relative action decrease over the stall window below which the run
    /// counts as converged.
    pub tol_s: f64,
    /// Smoothing length of the preconditioner, as a fraction of the nodes.
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            nodes: 200,
            max_iters: 2000,
            step0: 0.05,
            tol_s: 1e-7,
            smoothing: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeProblem {
    pub action: LocalAction,
    pub start: EndpointSet,
    pub end: EndpointSet,
    pub bbox: BoundingBox,
    pub opts: SolverOptions,
}

impl MinimizeProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.action.dim();
        if self.start.dim() != n || self.end.dim() != n || self.bbox.dim() != n {
            return Err(Error::Config(format!(
                "problem dimensions differ: action {n}, start {}, end {}, box {}",
                self.start.dim(),
                self.end.dim(),
                self.bbox.dim()
            )));
        }
        if self.opts.nodes < MIN_NODES {
            return Err(Error::Config(format!(
                "at least {MIN_NODES} nodes are needed, got {}",
                self.opts.nodes
            )));
        }
        let a = self.start.representative(&self.end.anchor());
        let b = self.end.representative(&a);
        if self.end.distance(&a) < 1e-12 || self.start.distance(&b) < 1e-12 {
            return Err(Error::Config("start and end sets intersect".into()));
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.bbox.diameter().max(f64::MIN_POSITIVE)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCause {
    /// Relative decrease fell below the tolerance over the stall window.
    Tolerance,
    /// No step length decreased the action.
    Stationary,
    MaxIters,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizeResult {
    #[serde(skip)]
    pub curve: ArcCurve,
    pub action_value: f64,
    pub converged: bool,
    pub stop: StopCause,
    pub iterations: usize,
    pub action_history: Vec<f64>,
    /// Whether the box clamped a node in the final curve.
    pub box_active: bool,
    pub seed_action: f64,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// Straight segment between the two sets, or, when the field has saddles
/// in the box, a two-piece polyline through the saddle that makes the
/// shortest detour.
pub fn seed_curve(p: &MinimizeProblem, field: Option<&dyn FlowField>) -> Result<Curve> {
    p.validate()?;
    let a = p.start.representative(&p.end.anchor());
    let b = p.end.representative(&a);
    let m = p.opts.nodes;
    let saddle = match field {
        Some(f) if f.dim() == a.len() => {
            let grid = GridSpec::uniform(&p.bbox, if a.len() <= 2 { 21 } else { 7 });
            find_equilibria(f, &p.bbox, &grid)?
                .into_iter()
                .filter(|e| e.kind == EquilibriumKind::Saddle)
                .map(|e| e.location)
                .min_by(|s, t| {
                    let ds = (s - &a).norm() + (s - &b).norm();
                    let dt = (t - &a).norm() + (t - &b).norm();
                    ds.total_cmp(&dt)
                })
        }
        _ => None,
    };
    match saddle {
        Some(s) if (&s - &a).norm() > 1e-12 && (&s - &b).norm() > 1e-12 => {
            let c = concat(&Curve::segment(&a, &s, 2)?, &Curve::segment(&s, &b, 2)?)?;
            Ok(reparameterize_arclength(&c, m)?.into_curve())
        }
        _ => Curve::segment(&a, &b, m),
    }
}

/// Action of each chord touching node `i`, with node `i` replaced by `x`.
fn local_action(a: &LocalAction, nodes: &[Vector], i: usize, x: &Vector) -> Result<f64> {
    let mut s = 0.0;
    if i > 0 {
        let p = &nodes[i - 1];
        s += a.eval(&((p + x) * 0.5), &(x - p))?;
    }
    if i + 1 < nodes.len() {
        let q = &nodes[i + 1];
        s += a.eval(&((x + q) * 0.5), &(q - x))?;
    }
    Ok(s)
}

/// Central-difference gradient of the discrete action with respect to the
/// movable nodes; fixed nodes get zero.
fn action_gradient(a: &LocalAction, nodes: &[Vector], movable: &[bool], h: f64) -> Result<Vec<Vector>> {
    let n = nodes[0].len();
    (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let mut g = Vector::zeros(n);
            if !movable[i] {
                return Ok(g);
            }
            for k in 0..n {
                let mut xp = nodes[i].clone();
                let mut xm = nodes[i].clone();
                xp[k] += h;
                xm[k] -= h;
                g[k] = (local_action(a, nodes, i, &xp)? - local_action(a, nodes, i, &xm)?) / (2.0 * h);
            }
            Ok(g)
        })
        .collect()
}

/// Removes the component along the curve; redistribution takes care of
/// tangential motion.
fn normal_part(nodes: &[Vector], g: &mut [Vector]) {
    let m = nodes.len();
    for i in 0..m {
        let (lo, hi) = (i.saturating_sub(1), (i + 1).min(m - 1));
        let t = &nodes[hi] - &nodes[lo];
        let tn = t.norm();
        if tn > 0.0 {
            let t = t / tn;
            let c = g[i].dot(&t);
            g[i] -= t * c;
        }
    }
}

/// Solves `(I − λ D²) v = g` per coordinate with the Thomas algorithm.
/// Fixed nodes are Dirichlet (their `v` stays zero).
fn smooth(g: &[Vector], movable: &[bool], lambda: f64) -> Vec<Vector> {
    let m = g.len();
    let n = g[0].len();
    let mut out = vec![Vector::zeros(n); m];
    if lambda <= 0.0 {
        return g.to_vec();
    }
    for k in 0..n {
        let mut diag = vec![1.0; m];
        let mut lower = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs: Vec<f64> = g.iter().map(|v| v[k]).collect();
        for i in 0..m {
            if !movable[i] {
                rhs[i] = 0.0;
                continue;
            }
            // Free endpoints get a one-sided (Neumann) stencil.
            let left = i > 0;
            let right = i + 1 < m;
            diag[i] = 1.0 + lambda * (left as u8 + right as u8) as f64;
            if left {
                lower[i] = -lambda;
            }
            if right {
                upper[i] = -lambda;
            }
        }
        for i in 1..m {
            let w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut x = vec![0.0; m];
        x[m - 1] = rhs[m - 1] / diag[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
        }
        for i in 0..m {
            out[i][k] = if movable[i] { x[i] } else { 0.0 };
        }
    }
    out
}

/// Endpoint projection, box clamping and arclength redistribution.
fn settle(p: &MinimizeProblem, mut nodes: Vec<Vector>) -> Result<(Curve, bool)> {
    let last = nodes.len() - 1;
    nodes[0] = p.start.project(&nodes[0]);
    nodes[last] = p.end.project(&nodes[last]);
    let mut clamped = false;
    for x in nodes.iter_mut() {
        let (y, hit) = p.bbox.clamp(x);
        clamped |= hit;
        *x = y;
    }
    let c = Curve::new(nodes)?;
    Ok((reparameterize_arclength(&c, p.opts.nodes)?.into_curve(), clamped))
}

fn turning(c: &Curve) -> f64 {
    if c.dim() != 2 {
        return 0.0;
    }
    let d: Vec<Vector> = c.chords().map(|(_, d)| d).filter(|d| d.norm() > 0.0).collect();
    d.windows(2)
        .map(|w| (w[0][0] * w[1][1] - w[0][1] * w[1][0]).atan2(w[0].dot(&w[1])))
        .sum()
}

/// Minimizes the discrete action starting from `seed`.
pub fn minimize_from(p: &MinimizeProblem, seed: &Curve) -> Result<MinimizeResult> {
    p.validate()?;
    let wrap = |iteration: usize| move |e: Error| Error::Evaluation {
        iteration,
        source: Box::new(e),
    };
    let (mut curve, mut box_active) = settle(p, seed.nodes().to_vec())?;
    let mut s = geometric_action(&p.action, &curve).map_err(wrap(0))?;
    let seed_action = s;
    let turning0 = turning(&curve);
    let m = p.opts.nodes;
    let mut movable = vec![true; m];
    movable[0] = !p.start.is_point();
    movable[m - 1] = !p.end.is_point();
    let scale = p.scale();
    let h = 1e-6 * scale;
    let lambda = (p.opts.smoothing * m as f64).powi(2);
    let mut history = vec![s];
    let mut stop = StopCause::MaxIters;
    let mut iterations = 0;
    for it in 1..=p.opts.max_iters {
        let nodes = curve.nodes();
        let mut g = action_gradient(&p.action, nodes, &movable, h).map_err(wrap(it))?;
        normal_part(nodes, &mut g);
        let d = smooth(&g, &movable, lambda);
        let dmax = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !(dmax > 0.0) || !dmax.is_finite() {
            stop = StopCause::Stationary;
            break;
        }
        let mut alpha = p.opts.step0 * scale;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<Vector> = nodes.iter().zip(&d).map(|(x, v)| x - v * (alpha / dmax)).collect();
            let (c, clamped) = settle(p, trial)?;
            match geometric_action(&p.action, &c) {
                Ok(st) if st < s => {
                    accepted = Some((c, clamped, st));
                    break;
                }
                Ok(_) | Err(Error::Domain(_)) | Err(Error::Metric(_)) => alpha *= 0.5,
                Err(e) => return Err(wrap(it)(e)),
            }
        }
        iterations = it;
        let Some((c, clamped, st)) = accepted else {
            stop = StopCause::Stationary;
            break;
        };
        curve = c;
        box_active = clamped;
        s = st;
        history.push(s);
        if history.len() > STALL_WINDOW {
            let old = history[history.len() - 1 - STALL_WINDOW];
            if (old - s) <= p.opts.tol_s * s.abs().max(f64::MIN_POSITIVE) {
                stop = StopCause::Tolerance;
                break;
            }
        }
    }
    let converged = stop != StopCause::MaxIters;
    let mut notes = Vec::new();
    if box_active {
        notes.push("nodes were clamped to the box; consider enlarging it".into());
    }
    let wound = (turning(&curve) - turning0).abs();
    if !converged && wound > std::f64::consts::TAU {
        notes.push(format!(
            "no convergence while the curve wound up by {:.2} turns: non-existence suspected",
            wound / std::f64::consts::TAU
        ));
    }
    Ok(MinimizeResult {
        curve: reparameterize_arclength(&curve, m)?,
        action_value: s,
        converged,
        stop,
        iterations,
        action_history: history,
        box_active,
        seed_action,
        seed: p.opts.seed,
        notes,
    })
}

/// Seeds with [`seed_curve`] and minimizes.
pub fn minimize(p: &MinimizeProblem, field: Option<&dyn FlowField>) -> Result<MinimizeResult> {
    let seed = seed_curve(p, field)?;
    minimize_from(p, &seed)
}

fn arclength_fractions(c: &Curve) -> Vec<f64> {
    let cum = c.cumulative_length();
    let total = cum[cum.len() - 1];
    cum.iter().map(|s| if total > 0.0 { s / total } else { 0.0 }).collect()
}

/// `φ_ε(α) = φ(α) + ε(α − α₀)·b(φ(α))` for `α ≥ α₀`, with `α` the arclength
/// fraction of each node.
pub fn bend_end_family(c: &Curve, f: &dyn FlowField, alpha0: f64, eps: f64) -> Result<Curve> {
    if !(0.0..1.0).contains(&alpha0) {
        return Err(Error::Config(format!("alpha0 must lie in [0, 1), got {alpha0}")));
    }
    let nodes = c
        .nodes()
        .iter()
        .zip(arclength_fractions(c))
        .map(|(x, a)| if a >= alpha0 { x + f.drift(x) * (eps * (a - alpha0)) } else { x.clone() })
        .collect();
    Curve::new(nodes)
}

/// `d/dε S(γ_ε)` at `ε = 0` by a central difference with `ε = 10⁻⁴·length`.
pub fn descent_derivative(c: &Curve, a: &LocalAction, f: &dyn FlowField, alpha0: f64) -> Result<f64> {
    let end = c.end();
    if f.drift(end).norm() <= 1e-6 {
        return Err(Error::Precondition("the curve ends where the drift vanishes".into()));
    }
    let eps = 1e-4 * c.length();
    let plus = geometric_action(a, &bend_end_family(c, f, alpha0, eps)?)?;
    let minus = geometric_action(a, &bend_end_family(c, f, alpha0, -eps)?)?;
    Ok((plus - minus) / (2.0 * eps))
}

/// First and last visits of a curve to a separatrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingReport {
    pub crossed: bool,
    pub first_index: Option<usize>,
    pub last_index: Option<usize>,
    pub first_point: Option<Vec<f64>>,
    pub last_point: Option<Vec<f64>>,
    /// Distances of the two hitting points to the nearest critical point.
    pub first_distance: Option<f64>,
    pub last_distance: Option<f64>,
    pub dist_tol: f64,
    pub pass_tol: f64,
    pub pass: bool,
}

fn point_segment_distance(x: &Vector, a: &Vector, b: &Vector) -> f64 {
    let d = b - a;
    let l2 = d.norm_squared();
    let t = if l2 > 0.0 { ((x - a).dot(&d) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (x - (a + d * t)).norm()
}

pub fn polyline_distance(x: &Vector, c: &Curve) -> f64 {
    c.nodes()
        .windows(2)
        .map(|w| point_segment_distance(x, &w[0], &w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Finds the first and last nodes of `c` within `dist_tol` of the
/// separatrix polyline and measures how far they are from the nearest
/// critical point. Passes when both are closer than `pass_tol`.
pub fn hitting_report(c: &Curve, separatrix: &Curve, critical: &[Vector], dist_tol: f64, pass_tol: f64) -> HittingReport {
    let near: Vec<usize> = c
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, x)| polyline_distance(x, separatrix) <= dist_tol)
        .map(|(i, _)| i)
        .collect();
    let dist = |i: usize| {
        critical
            .iter()
            .map(|p| (p - &c.nodes()[i]).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let (first, last) = (near.first().copied(), near.last().copied());
    let fd = first.map(dist);
    let ld = last.map(dist);
    let point = |i: Option<usize>| i.map(|i| c.nodes()[i].iter().copied().collect());
    HittingReport {
        crossed: first.is_some(),
        first_index: first,
        last_index: last,
        first_point: point(first),
        last_point: point(last),
        first_distance: fd,
        last_distance: ld,
        dist_tol,
        pass_tol,
        pass: matches!((fd, ld), (Some(a), Some(b)) if a < pass_tol && b < pass_tol),
    }
}

/// Action of the piece of `c` from node `from` to its end.
pub fn tail_action(a: &LocalAction, c: &Curve, from: usize) -> Result<f64> {
    if from + 1 >= c.len() {
        return Ok(0.0);
    }
    let nodes = c.nodes();
    let parts: Vec<f64> = (from..nodes.len() - 1)
        .map(|i| a.eval(&((&nodes[i] + &nodes[i + 1]) * 0.5), &(&nodes[i + 1] - &nodes[i])))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&parts))
}

/// Node-density spikes: chords shorter than `10⁻³` of the mean chord.
pub fn density_spikes(c: &Curve) -> Vec<usize> {
    let lengths = c.chord_lengths();
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    lengths
        .iter()
        .enumerate()
        .filter(|(_, l)| **l < 1e-3 * mean)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BuiltinField;
    use crate::space::{vector, Matrix};
    use std::sync::Arc;

    fn problem(action: LocalAction, a: &[f64], b: &[f64], half: f64, nodes: usize) -> MinimizeProblem {
        MinimizeProblem {
            action,
            start: EndpointSet::Point(vector(a)),
            end: EndpointSet::Point(vector(b)),
            bbox: BoundingBox::cube(a.len(), half),
            opts: SolverOptions {
                nodes,
                ..SolverOptions::default()
            },
        }
    }

    fn euclid() -> LocalAction {
        LocalAction::Riemannian {
            dim: 2,
            metric: Arc::new(|_: &Vector| Matrix::identity(2, 2)),
        }
    }

    #[test]
    fn seeds() {
        let p = problem(euclid(), &[-1.0, 0.0], &[1.0, 0.0], 2.0, 21);
        let c = seed_curve(&p, None).unwrap();
        assert_eq!(c.len(), 21);
        assert!((c.length() - 2.0).abs() < 1e-12);
        let c = seed_curve(&p, Some(&BuiltinField::DoubleWell)).unwrap();
        assert!(c.nodes().iter().any(|x| x.norm() < 1e-9));
        let mut p = p;
        p.end = EndpointSet::Sphere {
            center: vector(&[1.0, 0.0]),
            radius: 0.5,
        };
        let c = seed_curve(&p, None).unwrap();
        assert!((c.end() - vector(&[0.5, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn euclidean_minimizer_is_straight() {
        let p = problem(euclid(), &[0.0, 0.0], &[1.0, 1.0], 2.0, 32);
        let bent = Curve::new(
            (0..32)
                .map(|i| {
                    let t = i as f64 / 31.0;
                    vector(&[t, t + 0.6 * (std::f64::consts::PI * t).sin()])
                })
                .collect(),
        )
        .unwrap();
        let r = minimize_from(&p, &bent).unwrap();
        assert!(r.iterations <= 200, "{}", r.iterations);
        assert!((r.action_value - 2f64.sqrt()).abs() < 1e-4, "{}", r.action_value);
        assert!(r.action_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn bent_double_well_seed_relaxes() {
        let f: Arc<dyn FlowField> = Arc::new(BuiltinField::DoubleWell);
        let mut p = problem(LocalAction::sde_randers(f), &[-1.0, 0.0], &[1.0, 0.0], 2.0, 100);
        p.opts.max_iters = 3000;
        let bent = Curve::new(
            (0..100)
                .map(|i| {
                    let t = i as f64 / 99.0;
                    vector(&[2.0 * t - 1.0, 0.5 * (std::f64::consts::PI * t).sin()])
                })
                .collect(),
        )
        .unwrap();
        let r = minimize_from(&p, &bent).unwrap();
        assert!(r.action_value < r.seed_action);
        assert!((r.action_value - 0.5).abs() < 0.005, "{} after {}", r.action_value, r.iterations);
    }

    #[test]
    fn bend_family_on_vertical_segment() {
        let f = BuiltinField::Constant { b: vec![1.0, 0.0] };
        let a = LocalAction::sde_randers(Arc::new(f.clone()));
        let c = Curve::segment(&vector(&[0.0, 1.0]), &vector(&[0.0, 0.0]), 11).unwrap();
        assert_eq!(bend_end_family(&c, &f, 0.0, 0.0).unwrap(), c);
        let eps = 0.3;
        let bent = bend_end_family(&c, &f, 0.0, eps).unwrap();
        let s = geometric_action(&a, &bent).unwrap();
        assert!((s - ((1.0 + eps * eps).sqrt() - eps)).abs() < 1e-12);
        assert!((bent.end() - vector(&[eps, 0.0])).norm() < 1e-15);
        let d = descent_derivative(&c, &a, &f, 0.0).unwrap();
        assert!((d + 1.0).abs() < 1e-4, "{d}");
    }

    #[test]
    fn descent_along_flowline_is_flat() {
        let f = BuiltinField::Constant { b: vec![1.0, 0.0] };
        let a = LocalAction::sde_randers(Arc::new(f.clone()));
        let c = Curve::segment(&vector(&[0.0, 0.0]), &vector(&[1.0, 0.0]), 11).unwrap();
        assert!(descent_derivative(&c, &a, &f, 0.3).unwrap().abs() < 1e-8);
        let dw = BuiltinField::DoubleWell;
        let c = Curve::segment(&vector(&[0.5, 0.5]), &vector(&[0.8, 0.1]), 21).unwrap();
        let a = LocalAction::sde_randers(Arc::new(dw.clone()));
        assert!(descent_derivative(&c, &a, &dw, 0.0).unwrap() < 0.0);
        let to_eq = Curve::segment(&vector(&[0.5, 0.5]), &vector(&[1.0, 0.0]), 5).unwrap();
        assert!(matches!(descent_derivative(&to_eq, &a, &dw, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn hitting_in_one_basin_is_no_crossing() {
        let sep = Curve::segment(&vector(&[0.0, -2.0]), &vector(&[0.0, 2.0]), 3).unwrap();
        let c = Curve::segment(&vector(&[0.5, 0.0]), &vector(&[1.0, 0.0]), 11).unwrap();
        let r = hitting_report(&c, &sep, &[vector(&[0.0, 0.0])], 0.02, 0.05);
        assert!(!r.crossed && !r.pass);
    }
}
