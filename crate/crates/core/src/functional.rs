//! Curve functionals: the geometric action, its time-parameterized
//! counterpart, and the two bounds comparing the action with length.

use rayon::prelude::*;
use serde::Serialize;

use crate::actions::{alignment_gap, hamiltonian_local_action, legendre_lagrangian, Hamiltonian, LocalAction};
use crate::curves::Curve;
use crate::error::{Error, Result};
use crate::fields::FlowField;
use crate::space::{gaussian, pairwise_sum, random_unit, unit_directions, BoundingBox, GridSpec, Vector};

/// Chords at or above this count are evaluated in parallel.
const PARALLEL_CHORDS: usize = 64;

fn check_curve_dim(a: &LocalAction, c: &Curve) -> Result<()> {
    if c.dim() != a.dim() {
        return Err(Error::InvalidCurve(format!(
            "curve has dimension {} but the action has {}",
            c.dim(),
            a.dim()
        )));
    }
    Ok(())
}

/// `ℓ(midpoint, chord)` for every chord, in order.
pub fn chord_actions(a: &LocalAction, c: &Curve) -> Result<Vec<f64>> {
    check_curve_dim(a, c)?;
    let nodes = c.nodes();
    let chord = |i: usize| {
        let mid = (&nodes[i] + &nodes[i + 1]) * 0.5;
        a.eval(&mid, &(&nodes[i + 1] - &nodes[i]))
    };
    if nodes.len() > PARALLEL_CHORDS && matches!(a, LocalAction::Hamiltonian { .. }) {
        (0..nodes.len() - 1).into_par_iter().map(chord).collect()
    } else {
        (0..nodes.len() - 1).map(chord).collect()
    }
}

/// `S(γ) = Σ ℓ(x_{i+½}, x_{i+1} − x_i)`.
pub fn geometric_action(a: &LocalAction, c: &Curve) -> Result<f64> {
    Ok(pairwise_sum(&chord_actions(a, c)?))
}

/// A path sampled at strictly increasing times.
#[derive(Clone, Debug)]
pub struct TimedPath {
    pub times: Vec<f64>,
    pub points: Vec<Vector>,
}

impl TimedPath {
    pub fn new(times: Vec<f64>, points: Vec<Vector>) -> Result<Self> {
        if times.len() != points.len() || times.len() < 2 {
            return Err(Error::Config("a timed path needs matching times and points, at least two".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("timestamps must be strictly increasing".into()));
        }
        Ok(Self { times, points })
    }

    /// Constant-speed parameterization of `c` on `[0, duration]`.
    pub fn constant_speed(c: &Curve, duration: f64) -> Result<Self> {
        let cum = c.cumulative_length();
        let total = cum[cum.len() - 1];
        if !(total > 0.0) {
            return Err(Error::DegenerateCurve);
        }
        // Repeated nodes would give zero time steps; drop them.
        let mut times = Vec::with_capacity(cum.len());
        let mut points = Vec::with_capacity(cum.len());
        for (p, s) in c.nodes().iter().zip(&cum) {
            let t = duration * s / total;
            if times.last().is_some_and(|&last: &f64| t <= last) {
                continue;
            }
            times.push(t);
            points.push(p.clone());
        }
        Self::new(times, points)
    }
}

/// `S_T(χ) = Σ L(χ_{i+½}, Δχ_i/Δt_i) Δt_i`, the midpoint rule on each step.
pub fn time_action(h: &dyn Hamiltonian, path: &TimedPath) -> Result<f64> {
    let terms = (0..path.times.len() - 1)
        .map(|i| {
            let dt = path.times[i + 1] - path.times[i];
            let mid = (&path.points[i] + &path.points[i + 1]) * 0.5;
            let v = (&path.points[i + 1] - &path.points[i]) / dt;
            Ok(legendre_lagrangian(h, &mid, &v)? * dt)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

#[derive(Clone, Debug, Serialize)]
pub struct DoubleInfReport {
    pub geometric: f64,
    pub durations: Vec<f64>,
    pub time_actions: Vec<f64>,
    pub min_time_action: f64,
    pub argmin_duration: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Compares `S(γ)` with the time actions of constant-speed traversals of `γ`
/// over a grid of durations; the geometric action must not exceed any of them.
pub fn compare_double_inf(h: &dyn Hamiltonian, c: &Curve, durations: &[f64], tolerance: f64) -> Result<DoubleInfReport> {
    if durations.is_empty() || durations.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Config("durations must be a nonempty list of positive reals".into()));
    }
    let terms = c
        .chords()
        .map(|(mid, d)| hamiltonian_local_action(h, &mid, &d))
        .collect::<Result<Vec<f64>>>()?;
    let geometric = pairwise_sum(&terms);
    let time_actions = durations
        .iter()
        .map(|&t| time_action(h, &TimedPath::constant_speed(c, t)?))
        .collect::<Result<Vec<f64>>>()?;
    let (k, &min) = time_actions
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    Ok(DoubleInfReport {
        geometric,
        durations: durations.to_vec(),
        holds: time_actions.iter().all(|v| geometric <= v + tolerance),
        min_time_action: min,
        argmin_duration: durations[k],
        time_actions,
        tolerance,
    })
}

/// `count` log-spaced durations in `[lo, hi]`.
pub fn log_durations(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperBoundReport {
    /// `S(γ)`.
    pub value: f64,
    /// `𝔅 · length(γ)`.
    pub bound: f64,
    pub margin: f64,
    /// `𝔅 = 1 + max ℓ(x, ŷ)` over the samples.
    pub length_factor: f64,
    pub worst_sample: Option<Sample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    #[serde(serialize_with = "crate::space::ser_vec")]
    pub x: Vector,
    #[serde(serialize_with = "crate::space::ser_vec")]
    pub y: Vector,
}

/// Sampled `𝔅 = 1 + max_{x ∈ K, |y| = 1} ℓ(x, y)`. The grid is augmented with
/// `extra` points (typically chord midpoints of a curve) and directions.
pub fn length_factor(a: &LocalAction, k: &BoundingBox, per_axis: usize, directions: usize, extra: &[(Vector, Vector)]) -> Result<(f64, Option<Sample>)> {
    let dirs = unit_directions(a.dim(), directions, 0xb0b0);
    let grid = GridSpec::uniform(k, per_axis.max(2)).points();
    let mut candidates: Vec<(Vector, Vector)> = Vec::new();
    for x in grid.iter().chain(extra.iter().map(|(x, _)| x)) {
        for d in &dirs {
            candidates.push((x.clone(), d.clone()));
        }
    }
    for (x, y) in extra {
        let n = y.norm();
        if n > 0.0 {
            candidates.push((x.clone(), y / n));
        }
    }
    let values = candidates
        .par_iter()
        .map(|(x, y)| a.eval(x, y))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0.0;
    let mut arg = None;
    for (v, s) in values.iter().zip(&candidates) {
        if *v > best || arg.is_none() {
            best = *v;
            arg = Some(s);
        }
    }
    Ok((
        1.0 + best,
        arg.map(|(x, y)| Sample {
            x: x.clone(),
            y: y.clone(),
        }),
    ))
}

/// `S(γ) ≤ 𝔅(K) · length(γ)`.
pub fn action_upper_bound(a: &LocalAction, c: &Curve, k: &BoundingBox, directions: usize) -> Result<UpperBoundReport> {
    check_curve_dim(a, c)?;
    if let Some(p) = c.nodes().iter().find(|p| !k.contains_with_margin(p, 1e-12)) {
        return Err(Error::Domain(format!("curve leaves K at {:?}", p.as_slice())));
    }
    let length = c.length();
    let value = geometric_action(a, c)?;
    if length == 0.0 {
        return Ok(UpperBoundReport {
            value,
            bound: 0.0,
            margin: -value,
            length_factor: 1.0,
            worst_sample: None,
        });
    }
    let extra: Vec<(Vector, Vector)> = c.chords().collect();
    let per_axis = if a.dim() <= 2 { 21 } else { 5 };
    let (factor, worst) = length_factor(a, k, per_axis, directions, &extra)?;
    let bound = factor * length;
    Ok(UpperBoundReport {
        value,
        bound,
        margin: bound - value,
        length_factor: factor,
        worst_sample: worst,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftBoundReport {
    /// `ℓ(x, y)` at the worst sample.
    pub value: f64,
    /// `𝒜(|b||y| − ⟨b, y⟩)` at the worst sample.
    pub bound: f64,
    /// `value − bound` at the worst sample.
    pub margin: f64,
    pub worst_sample: Option<Sample>,
    pub violations: usize,
    pub samples: usize,
    /// Smallest `ℓ / (|b||y| − ⟨b, y⟩)` seen: an upper estimate of the
    /// largest constant for which the bound holds.
    pub min_ratio: f64,
    pub drift_constant: f64,
    pub seed: u64,
    pub tolerance: f64,
}

/// Samples `(x, y)` with `x` uniform in `K` and `y` Gaussian, and checks
/// `ℓ(x, y) ≥ 𝒜(|b(x)||y| − ⟨b(x), y⟩) − tolerance`.
pub fn drift_lower_bound_check(a: &LocalAction, f: &dyn FlowField, a_const: f64, k: &BoundingBox, samples: usize, seed: u64) -> Result<DriftBoundReport> {
    const TOLERANCE: f64 = 1e-9;
    if samples == 0 {
        return Err(Error::Config("drift lower bound check needs at least one sample".into()));
    }
    let mut rng = crate::rng(seed);
    let n = f.dim();
    let pairs: Vec<(Vector, Vector)> = (0..samples)
        .map(|_| {
            let x = k.sample(&mut rng);
            let y = random_unit(n, &mut rng) * gaussian(&mut rng).abs().max(1e-3);
            (x, y)
        })
        .collect();
    let evals = pairs
        .par_iter()
        .map(|(x, y)| {
            let l = a.eval(x, y)?;
            let gap = alignment_gap(&f.drift(x), y);
            Ok((l, gap))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let mut worst = (f64::INFINITY, 0.0, 0.0, None);
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for ((l, gap), (x, y)) in evals.iter().zip(&pairs) {
        let bound = a_const * gap;
        let margin = l - bound;
        if margin < -TOLERANCE {
            violations += 1;
        }
        if *gap > 1e-12 {
            min_ratio = min_ratio.min(l / gap);
        }
        if margin < worst.0 {
            worst = (margin, *l, bound, Some((x, y)));
        }
    }
    Ok(DriftBoundReport {
        value: worst.1,
        bound: worst.2,
        margin: worst.0,
        worst_sample: worst.3.map(|(x, y)| Sample {
            x: x.clone(),
            y: y.clone(),
        }),
        violations,
        samples,
        min_ratio,
        drift_constant: a_const,
        seed,
        tolerance: TOLERANCE,
    })
}
