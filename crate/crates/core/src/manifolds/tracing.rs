//! Flowline-tracing functions and the length-versus-action estimate they give.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{crossing_rules, resolve_orientation, Manifold};
use crate::actions::LocalAction;
use crate::curves::Curve;
use crate::error::{Error, Result};
use crate::fields::{
    run_flow, stable_distance, unstable_distance, DistanceOptions, Equilibrium, EquilibriumKind, FlowField, IntegratorOptions,
    SharedField, StopReason,
};
use crate::functional::geometric_action;
use crate::space::{halton, pairwise_sum, BoundingBox, Vector};

pub type TraceFn = Arc<dyn Fn(&Vector) -> Result<f64> + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TracingOptions {
    /// Quasi-random points drawn around the region to estimate the constants.
    pub samples: usize,
    /// Zero-set points used for the admissibility precheck.
    pub admissibility_samples: usize,
    pub seed: u64,
    pub t_max: f64,
    pub fd_step: f64,
    pub integrator: IntegratorOptions,
}

impl Default for TracingOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            admissibility_samples: 64,
            seed: 0,
            t_max: 1e3,
            fd_step: 1e-5,
            integrator: IntegratorOptions::with_tol(1e-12),
        }
    }
}

/// A function that moves at unit speed along the flow on
/// `E = f⁻¹((q1, q2))`, with sampled estimates of its constants.
#[derive(Clone)]
pub struct TracingFunction {
    f: TraceFn,
    pub q1: f64,
    pub q2: f64,
    /// Sampled `sup |∇f|` over `E` (a lower estimate of the true value).
    pub grad_bound: f64,
    /// Sampled `min |b|` over `E` (an upper estimate of the true value).
    pub min_drift: f64,
    /// `+1` when `f` increases along the flow, `−1` when it decreases.
    pub sign: f64,
    /// Largest sampled `|σ⟨∇f, b⟩ − |b||`.
    pub tracing_residual: f64,
    /// Whether every sample in `E` agreed on the sign of `⟨∇f, b⟩`.
    pub sign_uniform: bool,
    pub region_samples: usize,
}

impl fmt::Debug for TracingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TracingFunction")
            .field("q1", &self.q1)
            .field("q2", &self.q2)
            .field("grad_bound", &self.grad_bound)
            .field("min_drift", &self.min_drift)
            .field("sign", &self.sign)
            .field("tracing_residual", &self.tracing_residual)
            .finish_non_exhaustive()
    }
}

impl TracingFunction {
    /// A tracing function with user-supplied constants.
    pub fn new(f: TraceFn, q1: f64, q2: f64, grad_bound: f64, min_drift: f64, sign: f64) -> Result<Self> {
        if !(q1 < q2) {
            return Err(Error::Config(format!("tracing window needs q1 < q2, got ({q1}, {q2})")));
        }
        Ok(Self {
            f,
            q1,
            q2,
            grad_bound,
            min_drift,
            sign,
            tracing_residual: 0.0,
            sign_uniform: true,
            region_samples: 0,
        })
    }

    pub fn eval(&self, x: &Vector) -> Result<f64> {
        (self.f)(x)
    }

    pub fn in_region(&self, x: &Vector) -> Result<bool> {
        let v = self.eval(x)?;
        Ok(v > self.q1 && v < self.q2)
    }

    pub fn function(&self) -> TraceFn {
        self.f.clone()
    }
}

/// `min(max(a, q1), q2)`.
pub fn clamp(q1: f64, q2: f64, a: f64) -> Result<f64> {
    if !(q1 < q2) {
        return Err(Error::Config(format!("clamp needs q1 < q2, got ({q1}, {q2})")));
    }
    Ok(a.max(q1).min(q2))
}

struct Estimates {
    grad_bound: f64,
    min_drift: f64,
    sign: f64,
    residual: f64,
    uniform: bool,
    count: usize,
}

fn halton_points(bbox: &BoundingBox, count: usize, seed: u64) -> Vec<Vector> {
    // The seed shifts the start of the sequence so that repeated runs with
    // different seeds see different points.
    let offset = (seed % 1_000_003) as usize;
    (0..count).map(|i| bbox.from_unit(&halton(i + offset, bbox.dim()))).collect()
}

fn estimate(
    f: &(dyn Fn(&Vector) -> Result<f64> + Sync),
    field: &dyn FlowField,
    points: &[(Vector, f64)],
    q1: f64,
    q2: f64,
    h: f64,
) -> Result<Estimates> {
    let inside: Vec<&Vector> = points.iter().filter(|(_, v)| *v > q1 && *v < q2).map(|(x, _)| x).collect();
    if inside.is_empty() {
        return Err(Error::Config(
            "no sample fell inside the tracing region; increase the sample count or eps".into(),
        ));
    }
    let stats: Vec<(f64, f64, f64)> = inside
        .par_iter()
        .map(|x| {
            let n = x.len();
            let mut g = Vector::zeros(n);
            for k in 0..n {
                let mut xp = (*x).clone();
                let mut xm = (*x).clone();
                xp[k] += h;
                xm[k] -= h;
                g[k] = (f(&xp)? - f(&xm)?) / (2.0 * h);
            }
            let b = field.drift(x);
            Ok((g.norm(), g.dot(&b), b.norm()))
        })
        .collect::<Result<_>>()?;
    let along: f64 = stats.iter().map(|s| s.1).sum();
    let sign = if along < 0.0 { -1.0 } else { 1.0 };
    let mut out = Estimates {
        grad_bound: 0.0,
        min_drift: f64::INFINITY,
        sign,
        residual: 0.0,
        uniform: true,
        count: stats.len(),
    };
    for (gn, gb, bn) in stats {
        out.grad_bound = out.grad_bound.max(gn);
        out.min_drift = out.min_drift.min(bn);
        out.residual = out.residual.max((sign * gb - bn).abs());
        if sign * gb < 0.0 && bn > 0.0 {
            out.uniform = false;
        }
    }
    Ok(out)
}

/// Signed flowline arclength from the manifold to `x`, clamped to
/// `±2·eps`. The second value is false when the flowline stopped short of
/// both the manifold and the clamp length (it stalled or diverged).
fn manifold_trace(m: &Manifold, field: &dyn FlowField, x: &Vector, eps: f64, t_max: f64, opts: &IntegratorOptions) -> (f64, bool) {
    let v = m.value(x);
    if v == 0.0 {
        return (0.0, true);
    }
    // Points with f_M > 0 lie downstream of the manifold, so the crossing is
    // found by flowing backward; the outer value takes the sign of f_M.
    let dir = if v > 0.0 { -1.0 } else { 1.0 };
    let outer = -dir * 2.0 * eps;
    let level = |y: &Vector| m.raw_level(y);
    let rules = crossing_rules(&level, Some(2.0 * eps));
    match run_flow(field, x, dir * t_max, opts, &rules) {
        Ok(run) => match run.stop {
            StopReason::Event => (-dir * run.arclength, true),
            StopReason::ArcLimit => (outer, true),
            _ => (outer, run.arclength == 0.0),
        },
        Err(_) => (outer, false),
    }
}

/// Tracing function built from an admissible manifold: signed arclength
/// along the flowline from the manifold, clamped to `±2·eps` away from it.
/// Traces the flow between `−eps` and `eps`.
pub fn tracing_from_manifold(m: &Manifold, field: SharedField, eps: f64, opts: &TracingOptions) -> Result<TracingFunction> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let (m, _) = resolve_orientation(m, field.as_ref(), opts.admissibility_samples, opts.seed)?;
    let sample_box = m.bbox.expanded(2.0 * eps);
    let points = halton_points(&sample_box, opts.samples, opts.seed);
    let (t_max, integ) = (opts.t_max, opts.integrator.clone());
    let values: Vec<(Vector, f64)> = points
        .into_par_iter()
        .map(|x| {
            let (v, ok) = manifold_trace(&m, field.as_ref(), &x, eps, t_max, &integ);
            if ok {
                Ok((x, v))
            } else {
                Err(Error::ShrinkEps(format!(
                    "the flowline through {:?} neither reaches the manifold nor leaves its 2·eps neighborhood",
                    x.as_slice()
                )))
            }
        })
        .collect::<Result<_>>()?;
    let f: TraceFn = {
        let (m, field, integ) = (m.clone(), field.clone(), integ.clone());
        Arc::new(move |x: &Vector| Ok(manifold_trace(&m, field.as_ref(), x, eps, t_max, &integ).0))
    };
    let est = estimate(f.as_ref(), field.as_ref(), &values, -eps, eps, opts.fd_step)?;
    Ok(with_estimates(f, -eps, eps, est))
}

fn with_estimates(f: TraceFn, q1: f64, q2: f64, est: Estimates) -> TracingFunction {
    TracingFunction {
        f,
        q1,
        q2,
        grad_bound: est.grad_bound,
        min_drift: est.min_drift,
        sign: est.sign,
        tracing_residual: est.residual,
        sign_uniform: est.uniform,
        region_samples: est.count,
    }
}

/// `min(f_s, eps)` around an attractor, or `min(f_u, eps)` around a
/// repellor, with value `eps` outside the basin. Traces between `0` and `eps`.
pub fn tracing_from_equilibrium(field: SharedField, eq: &Equilibrium, eps: f64, opts: &TracingOptions) -> Result<TracingFunction> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let repellor = match eq.kind {
        EquilibriumKind::Attractor => false,
        EquilibriumKind::Repellor => true,
        k => {
            return Err(Error::Precondition(format!(
                "tracing from an equilibrium needs an attractor or repellor, got {k:?}"
            )))
        }
    };
    let dist = DistanceOptions {
        t_max: opts.t_max,
        integrator: opts.integrator.clone(),
        ..DistanceOptions::default()
    };
    let f: TraceFn = {
        let (field, eq) = (field.clone(), eq.clone());
        Arc::new(move |w: &Vector| {
            // The flowline arclength is at least the straight distance.
            if (w - &eq.location).norm() >= eps {
                return Ok(eps);
            }
            let d = if repellor {
                unstable_distance(field.as_ref(), &eq, w, &dist)
            } else {
                stable_distance(field.as_ref(), &eq, w, &dist)
            };
            match d {
                Ok(v) => Ok(v.min(eps)),
                Err(Error::NotInBasin(_)) => Ok(eps),
                Err(e) => Err(e),
            }
        })
    };
    let sample_box = BoundingBox::around(&eq.location, eps);
    let values: Vec<(Vector, f64)> = halton_points(&sample_box, opts.samples, opts.seed)
        .into_par_iter()
        .map(|x| {
            let v = f(&x)?;
            Ok((x, v))
        })
        .collect::<Result<_>>()?;
    let est = estimate(f.as_ref(), field.as_ref(), &values, 0.0, eps, opts.fd_step)?;
    Ok(with_estimates(f, 0.0, eps, est))
}

/// Both sides of the length-versus-action estimate for one curve.
#[derive(Clone, Debug, Serialize)]
pub struct KeyEstimate {
    /// Length of the part of the curve inside the tracing region.
    pub lhs: f64,
    pub rhs: f64,
    pub action: f64,
    /// `|clamp(f(start)) − clamp(f(end))|`.
    pub delta: f64,
    /// Allowance for judging region membership by chord midpoints.
    pub slack: f64,
    pub holds: bool,
}

/// Evaluates `length(γ|_E) ≤ (2𝓗²/(𝒜𝒢))·S(γ) + 2|h(f(start)) − h(f(end))|`.
pub fn key_estimate_bound(t: &TracingFunction, a: &LocalAction, a_const: f64, c: &Curve) -> Result<KeyEstimate> {
    if !(a_const > 0.0) {
        return Err(Error::Config(format!("drift constant must be positive, got {a_const}")));
    }
    let chords: Vec<(Vector, Vector)> = c.chords().collect();
    let parts: Vec<f64> = chords
        .par_iter()
        .map(|(mid, d)| Ok(if t.in_region(mid)? { d.norm() } else { 0.0 }))
        .collect::<Result<_>>()?;
    let lhs = pairwise_sum(&parts);
    let action = geometric_action(a, c)?;
    let h0 = clamp(t.q1, t.q2, t.eval(c.start())?)?;
    let h1 = clamp(t.q1, t.q2, t.eval(c.end())?)?;
    let delta = (h0 - h1).abs();
    let factor = 2.0 * t.grad_bound * t.grad_bound / (a_const * t.min_drift);
    let rhs = if action == 0.0 { 2.0 * delta } else { factor * action + 2.0 * delta };
    let max_chord = chords.iter().map(|(_, d)| d.norm()).fold(0.0, f64::max);
    let slack = 1e-6 + 2.0 * max_chord;
    Ok(KeyEstimate {
        lhs,
        rhs,
        action,
        delta,
        slack,
        holds: lhs <= rhs + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BuiltinField;
    use crate::space::vector;

    fn quick() -> TracingOptions {
        TracingOptions {
            samples: 400,
            ..TracingOptions::default()
        }
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(clamp(0.0, 1.0, 1.7).unwrap(), 1.0);
        assert_eq!(clamp(0.0, 1.0, -0.3).unwrap(), 0.0);
        assert_eq!(clamp(0.0, 1.0, 0.4).unwrap(), 0.4);
        assert!(matches!(clamp(1.0, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn hyperplane_tracing_is_the_coordinate() {
        let field: SharedField = Arc::new(BuiltinField::Constant { b: vec![1.0, 0.0] });
        let m = Manifold::new("plane", BoundingBox::cube(2, 1.0), |x: &Vector| x[0]);
        let t = tracing_from_manifold(&m, field, 0.25, &quick()).unwrap();
        assert!((t.eval(&vector(&[0.2, 0.3])).unwrap() - 0.2).abs() < 1e-10);
        assert!((t.eval(&vector(&[-0.1, 0.0])).unwrap() + 0.1).abs() < 1e-10);
        assert_eq!(t.eval(&vector(&[0.9, 0.0])).unwrap(), 0.5);
        assert_eq!(t.eval(&vector(&[-0.9, 0.0])).unwrap(), -0.5);
        assert_eq!(t.eval(&vector(&[0.0, 0.7])).unwrap(), 0.0);
        assert!((t.grad_bound - 1.0).abs() < 1e-6 && (t.min_drift - 1.0).abs() < 1e-12, "{t:?}");
        assert!(t.tracing_residual < 1e-6 && t.sign == 1.0 && t.sign_uniform);
    }

    #[test]
    fn radial_tracing_is_inward_arclength() {
        let field: SharedField = Arc::new(BuiltinField::LinearRadial { rate: 1.0, dim: 2 });
        let m = Manifold::new("circle", BoundingBox::cube(2, 1.25), |x: &Vector| x.norm_squared() - 1.0);
        let t = tracing_from_manifold(&m, field, 0.3, &quick()).unwrap();
        for r in [0.75, 0.9, 1.0, 1.2] {
            let x = vector(&[r * 0.6, -r * 0.8]);
            assert!((t.eval(&x).unwrap() - (1.0 - r)).abs() < 1e-9, "r = {r}");
        }
        assert!(t.tracing_residual < 1e-6, "{}", t.tracing_residual);
    }

    #[test]
    fn radial_equilibrium_tracing() {
        let field: SharedField = Arc::new(BuiltinField::LinearRadial { rate: 1.0, dim: 2 });
        let eq = Equilibrium::classify(field.as_ref(), vector(&[0.0, 0.0]));
        let t = tracing_from_equilibrium(field, &eq, 0.5, &quick()).unwrap();
        assert_eq!(t.eval(&eq.location).unwrap(), 0.0);
        let w = vector(&[0.12, 0.16]);
        assert!((t.eval(&w).unwrap() - 0.2).abs() < 1e-8);
        assert_eq!(t.eval(&vector(&[0.6, 0.0])).unwrap(), 0.5);
        assert_eq!(t.sign, -1.0);
    }

    #[test]
    fn key_estimate_on_reverse_segment() {
        let f: TraceFn = Arc::new(|x: &Vector| Ok(x[0]));
        let t = TracingFunction::new(f, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let a = LocalAction::sde_randers(Arc::new(BuiltinField::Constant { b: vec![1.0, 0.0] }));
        let c = Curve::segment(&vector(&[1.0, 0.0]), &vector(&[0.0, 0.0]), 11).unwrap();
        let k = key_estimate_bound(&t, &a, 1.0, &c).unwrap();
        assert!((k.lhs - 1.0).abs() < 1e-12);
        assert!((k.rhs - 6.0).abs() < 1e-12);
        assert!(k.holds);
        let forward = Curve::segment(&vector(&[0.2, 0.0]), &vector(&[0.7, 0.0]), 11).unwrap();
        let k = key_estimate_bound(&t, &a, 1.0, &forward).unwrap();
        assert!((k.lhs - 0.5).abs() < 1e-12 && (k.rhs - 1.0).abs() < 1e-12);
    }
}
