//! Periodic orbit detection in the plane via a Poincaré section.

use serde::Serialize;

use super::{flow, run_flow, FlowField, IntegratorOptions, StopReason, StopRules};
use crate::error::{Error, Result};
use crate::space::Vector;

pub const TOL_CYCLE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitCycleReport {
    pub found: bool,
    #[serde(serialize_with = "crate::space::ser_opt_vec")]
    pub sample_point: Option<Vector>,
    pub period: Option<f64>,
    pub residual: Option<f64>,
}

impl LimitCycleReport {
    fn none() -> Self {
        Self {
            found: false,
            sample_point: None,
            period: None,
            residual: None,
        }
    }
}

/// Looks for an attracting cycle by forward integration from `seed`, then a
/// repelling one by backward integration. Half of `t_max` is spent on the
/// transient, the rest on waiting for a return to the section.
pub fn detect_limit_cycle(field: &dyn FlowField, seed: &Vector, t_max: f64, opts: &IntegratorOptions) -> Result<LimitCycleReport> {
    if field.dim() != 2 || seed.len() != 2 {
        return Err(Error::Precondition("limit-cycle detection is planar".into()));
    }
    for dir in [1.0, -1.0] {
        if let Some(r) = detect_directed(field, seed, t_max, opts, dir)? {
            return Ok(r);
        }
    }
    Ok(LimitCycleReport::none())
}

fn detect_directed(field: &dyn FlowField, seed: &Vector, t_max: f64, opts: &IntegratorOptions, dir: f64) -> Result<Option<LimitCycleReport>> {
    let mut x0 = match flow(field, seed, dir * 0.5 * t_max, opts) {
        Ok(x) => x,
        Err(Error::Divergence { .. }) | Err(Error::SolverFailure { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let scale = x0.norm().max(1.0);
    // Successive returns converge onto the cycle; a few passes also absorb
    // what is left of the transient.
    for _ in 0..4 {
        let speed = field.drift(&x0).norm();
        if speed < 1e-8 * scale {
            return Ok(None);
        }
        match first_return(field, &x0, 0.5 * t_max, opts, dir)? {
            Some((p, period)) => {
                let residual = (&p - &x0).norm();
                if residual < TOL_CYCLE * scale {
                    return Ok(Some(LimitCycleReport {
                        found: true,
                        sample_point: Some(p),
                        period: Some(period),
                        residual: Some(residual),
                    }));
                }
                x0 = p;
            }
            None => return Ok(None),
        }
    }
    Ok(None)
}

/// First negative-to-positive crossing of the section through `x0` with
/// normal `b(x0)` that lands near `x0`.
fn first_return(field: &dyn FlowField, x0: &Vector, t_max: f64, opts: &IntegratorOptions, dir: f64) -> Result<Option<(Vector, f64)>> {
    let normal = field.drift(x0) * dir;
    let normal = &normal / normal.norm();
    let scale = x0.norm().max(1.0);
    let mut start = x0.clone();
    let mut elapsed = 0.0;
    let mut crossed_negative = false;
    while elapsed < t_max {
        // Leave the section first, then wait for the sign to go negative and
        // come back. Each leg is a separate event search.
        let target_negative = !crossed_negative;
        let g = |x: &Vector| normal.dot(&(x - x0));
        let ev = |x: &Vector| {
            let v = g(x);
            if target_negative {
                // Fires when g drops below zero.
                v + 1e-12 * scale
            } else {
                v
            }
        };
        let rules = StopRules {
            event: Some(&ev),
            ..StopRules::default()
        };
        let run = match run_flow(field, &start, dir * (t_max - elapsed), opts, &rules) {
            Ok(r) => r,
            Err(Error::Divergence { .. }) | Err(Error::SolverFailure { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        elapsed += run.time.abs();
        if run.stop != StopReason::Event {
            return Ok(None);
        }
        if target_negative {
            crossed_negative = true;
            start = run.state;
            continue;
        }
        // Crossing of the section line; accept only near the base point.
        if (&run.state - x0).norm() < 1e-3 * scale {
            return Ok(Some((run.state, elapsed)));
        }
        crossed_negative = false;
        start = run.state;
        // Nudge past the crossing so the next negative leg starts clean.
        let nudge = run_flow(field, &start, dir * 1e-6, opts, &StopRules::default())?;
        elapsed += 1e-6;
        start = nudge.state;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BuiltinField;
    use crate::space::vector;

    #[test]
    fn unit_cycle_is_found() {
        let f = BuiltinField::LimitCycle;
        let r = detect_limit_cycle(&f, &vector(&[0.2, 0.0]), 100.0, &IntegratorOptions::default()).unwrap();
        assert!(r.found);
        let p = r.sample_point.unwrap();
        assert!((p.norm() - 1.0).abs() < 1e-6);
        assert!((r.period.unwrap() - std::f64::consts::TAU).abs() < 1e-3);
        let back = flow(&f, &p, r.period.unwrap(), &IntegratorOptions::default()).unwrap();
        assert!((back - p).norm() < TOL_CYCLE);
    }

    #[test]
    fn gradient_fields_have_no_cycles() {
        let opts = IntegratorOptions::default();
        let radial = BuiltinField::LinearRadial { rate: 1.0, dim: 2 };
        assert!(!detect_limit_cycle(&radial, &vector(&[0.5, 0.5]), 100.0, &opts).unwrap().found);
        let dw = BuiltinField::DoubleWell;
        assert!(!detect_limit_cycle(&dw, &vector(&[0.3, 0.7]), 100.0, &opts).unwrap().found);
    }
}
