//! Flowline arclength to an attractor (forward) or from a repellor (backward).

use serde::{Deserialize, Serialize};

use super::{run_flow, Equilibrium, EquilibriumKind, FlowField, FnField, IntegratorOptions, StopReason, StopRules};
use crate::error::{Error, Result};
use crate::space::{BoundingBox, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceOptions {
    /// Radius at which the nonlinear flow is handed over to the linearization.
    pub r_loc: f64,
    pub t_max: f64,
    /// Leaving this box before reaching the equilibrium means "not in basin".
    pub escape_box: Option<BoundingBox>,
    pub integrator: IntegratorOptions,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            r_loc: 1e-4,
            t_max: 1e3,
            escape_box: None,
            integrator: IntegratorOptions::default(),
        }
    }
}

/// `f_s(w)`: arclength of the forward flowline from `w` into the attractor.
pub fn stable_distance(field: &dyn FlowField, eq: &Equilibrium, w: &Vector, opts: &DistanceOptions) -> Result<f64> {
    if eq.kind != EquilibriumKind::Attractor {
        return Err(Error::Precondition(format!(
            "stable distance needs an attractor, got {:?}",
            eq.kind
        )));
    }
    distance(field, eq, w, opts, 1.0)
}

/// `f_u(w)`: arclength of the backward flowline from `w` into the repellor.
pub fn unstable_distance(field: &dyn FlowField, eq: &Equilibrium, w: &Vector, opts: &DistanceOptions) -> Result<f64> {
    if eq.kind != EquilibriumKind::Repellor {
        return Err(Error::Precondition(format!(
            "unstable distance needs a repellor, got {:?}",
            eq.kind
        )));
    }
    distance(field, eq, w, opts, -1.0)
}

fn distance(field: &dyn FlowField, eq: &Equilibrium, w: &Vector, opts: &DistanceOptions, sign: f64) -> Result<f64> {
    let center = &eq.location;
    let d0 = (w - center).norm();
    if d0 == 0.0 {
        return Ok(0.0);
    }
    if d0 <= opts.r_loc {
        return linear_tail(field, eq, w - center, sign, opts);
    }
    let r_loc = opts.r_loc;
    let escape = opts.escape_box.clone();
    // Leaving the escape box drives the event function negative as well;
    // the two cases are told apart afterwards by the stopping state.
    let g = move |x: &Vector| match &escape {
        Some(b) if !b.contains(x) => -1.0,
        _ => (x - center).norm() - r_loc,
    };
    let rules = StopRules {
        event: Some(&g),
        ..StopRules::default()
    };
    let not_in_basin = |why: String| Error::NotInBasin(why);
    let run = match run_flow(field, w, sign * opts.t_max, &opts.integrator, &rules) {
        Ok(run) => run,
        Err(Error::Divergence { time, .. }) => return Err(not_in_basin(format!("flow diverged at t = {time}"))),
        Err(e) => return Err(e),
    };
    if run.stop != StopReason::Event {
        return Err(not_in_basin(format!("no approach within t_max = {}", opts.t_max)));
    }
    let offset = &run.state - center;
    if offset.norm() > 2.0 * r_loc {
        return Err(not_in_basin("flow left the escape box".into()));
    }
    Ok(run.arclength + linear_tail(field, eq, offset, sign, opts)?)
}

/// Arclength of `z' = ±∇b(eq) z` from `z0` into the origin. The system is
/// linear, so it is integrated from `z0/|z0|` and the length rescaled; this
/// keeps the absolute tolerance meaningful for tiny offsets.
fn linear_tail(field: &dyn FlowField, eq: &Equilibrium, z0: Vector, sign: f64, opts: &DistanceOptions) -> Result<f64> {
    let j = field.jacobian(&eq.location) * sign;
    let n = field.dim();
    let lin = FnField::new(n, move |z: &Vector| &j * z);
    let r0 = z0.norm();
    let g = |z: &Vector| z.norm() - 1e-8;
    let rules = StopRules {
        event: Some(&g),
        ..StopRules::default()
    };
    let run = run_flow(&lin, &(z0 / r0), opts.t_max, &opts.integrator, &rules)?;
    Ok(r0 * (run.arclength + run.state.norm()))
}

/// Sample estimate of `sup f_s(w) / |w − eq|` over the given points. Points
/// outside the basin are skipped.
pub fn linear_bound_estimate(field: &dyn FlowField, eq: &Equilibrium, samples: &[Vector], opts: &DistanceOptions) -> Result<f64> {
    let mut worst: f64 = 1.0;
    for w in samples {
        let d = (w - &eq.location).norm();
        if d == 0.0 {
            continue;
        }
        let f = match eq.kind {
            EquilibriumKind::Repellor => unstable_distance(field, eq, w, opts),
            _ => stable_distance(field, eq, w, opts),
        };
        match f {
            Ok(v) => worst = worst.max(v / d),
            Err(Error::NotInBasin(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(worst)
}
