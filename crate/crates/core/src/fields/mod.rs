//! Drift vector fields and their flows.
//!
//! A [`FlowField`] supplies the drift `b(x)` and its Jacobian. Flows are
//! integrated with the adaptive solver in [`integrator`]; [`run_flow`] is the
//! general driver that also tracks arclength and stops on events, arclength
//! budgets or stalls.

pub mod builtin;
pub mod cycles;
pub mod distance;
pub mod equilibria;
pub mod integrator;
pub mod invariant;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{jacobian_fd, Matrix, Vector};

pub use builtin::{double_well_potential, BuiltinField, Monomial};
pub use cycles::{detect_limit_cycle, LimitCycleReport};
pub use distance::{stable_distance, unstable_distance, DistanceOptions};
pub use equilibria::{find_equilibria, Eigenvalue, Equilibrium, EquilibriumKind};
pub use integrator::IntegratorOptions;
pub use invariant::{trace_invariant_manifolds_2d, BranchKind, ManifoldBranch};

/// Step used for finite-difference Jacobians when no analytic one is given.
pub const JACOBIAN_STEP: f64 = 1e-6;

pub trait FlowField: Send + Sync {
    fn dim(&self) -> usize;

    fn drift(&self, x: &Vector) -> Vector;

    fn jacobian(&self, x: &Vector) -> Matrix {
        jacobian_fd(|z| self.drift(z), x, JACOBIAN_STEP)
    }
}

pub type SharedField = Arc<dyn FlowField>;

impl<T: FlowField + ?Sized> FlowField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn drift(&self, x: &Vector) -> Vector {
        (**self).drift(x)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        (**self).jacobian(x)
    }
}

impl<T: FlowField + ?Sized> FlowField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn drift(&self, x: &Vector) -> Vector {
        (**self).drift(x)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        (**self).jacobian(x)
    }
}

type DriftFn = dyn Fn(&Vector) -> Vector + Send + Sync;
type JacobianFn = dyn Fn(&Vector) -> Matrix + Send + Sync;

/// A field given by closures.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    drift: Arc<DriftFn>,
    jacobian: Option<Arc<JacobianFn>>,
}

impl FnField {
    pub fn new<F>(dim: usize, drift: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        Self {
            dim,
            drift: Arc::new(drift),
            jacobian: None,
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }
}

impl std::fmt::Debug for FnField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnField").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl FlowField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn drift(&self, x: &Vector) -> Vector {
        (self.drift)(x)
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        match &self.jacobian {
            Some(j) => j(x),
            None => jacobian_fd(|z| (self.drift)(z), x, JACOBIAN_STEP),
        }
    }
}

/// Why [`run_flow`] stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Reached the requested time.
    Completed,
    /// The event function changed sign.
    Event,
    /// The arclength budget was used up.
    ArcLimit,
    /// The drift fell below the stall speed.
    Stalled,
}

/// Stopping rules for [`run_flow`].
pub struct StopRules<'a> {
    pub event: Option<&'a (dyn Fn(&Vector) -> f64 + 'a)>,
    pub arc_limit: Option<f64>,
    pub stall_speed: f64,
    pub record: bool,
}

impl Default for StopRules<'_> {
    fn default() -> Self {
        Self {
            event: None,
            arc_limit: None,
            stall_speed: 0.0,
            record: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowRun {
    /// Signed time at which integration stopped.
    pub time: f64,
    pub state: Vector,
    pub arclength: f64,
    pub stop: StopReason,
    /// Accepted states including the start, when recording was requested.
    pub path: Vec<Vector>,
}

/// Integrates `ẋ = b(x)` from `x` for signed time `t` (negative integrates
/// backward) together with the traversed arclength.
pub fn run_flow(field: &dyn FlowField, x: &Vector, t: f64, opts: &IntegratorOptions, rules: &StopRules) -> Result<FlowRun> {
    let n = field.dim();
    if x.len() != n {
        return Err(Error::Config(format!("point has dimension {} but the field has {n}", x.len())));
    }
    let mut path = Vec::new();
    if rules.record {
        path.push(x.clone());
    }
    let done = |time: f64, state: Vector, arclength: f64, stop, path| {
        Ok(FlowRun {
            time,
            state,
            arclength,
            stop,
            path,
        })
    };
    if t == 0.0 {
        return done(0.0, x.clone(), 0.0, StopReason::Completed, path);
    }
    if rules.stall_speed > 0.0 && field.drift(x).norm() < rules.stall_speed {
        return done(0.0, x.clone(), 0.0, StopReason::Stalled, path);
    }
    let sign = t.signum();
    let rhs = |y: &Vector| {
        let xs = y.rows(0, n).into_owned();
        let b = field.drift(&xs);
        let speed = b.norm();
        let mut out = Vector::zeros(n + 1);
        out.rows_mut(0, n).copy_from(&(b * sign));
        out[n] = speed;
        out
    };
    let mut y0 = Vector::zeros(n + 1);
    y0.rows_mut(0, n).copy_from(x);
    let mut bounded = opts.clone();
    // The arclength coordinate must not trigger the divergence bound or
    // affect error control, so the bound applies to the state part only.
    bounded.bound = f64::INFINITY;
    let mut st = integrator::Stepper::new(rhs, y0, &bounded, sign);
    let tau_end = t.abs();
    let state_of = |y: &Vector| y.rows(0, n).into_owned();
    while st.tau < tau_end {
        st.step(tau_end)?;
        let xs = state_of(&st.y);
        let norm = xs.norm();
        if norm > opts.bound || !norm.is_finite() {
            return Err(Error::Divergence {
                time: sign * st.tau,
                norm,
            });
        }
        if let Some(g) = rules.event {
            let g_prev = g(&state_of(&st.prev_y));
            let g_cur = g(&xs);
            if g_cur == 0.0 || (g_prev != 0.0 && (g_prev > 0.0) != (g_cur > 0.0)) {
                let (s, y) = st.locate(|y| g(&state_of(y)));
                // When the arclength budget runs out within the same step,
                // whichever happens first wins.
                if rules.arc_limit.is_none_or(|limit| y[n] <= limit) {
                    let xe = state_of(&y);
                    if rules.record {
                        path.push(xe.clone());
                    }
                    return done(sign * (st.prev_tau + s), xe, y[n], StopReason::Event, path);
                }
            }
        }
        if let Some(limit) = rules.arc_limit {
            if st.y[n] >= limit {
                let (s, y) = st.locate_level(|y| y[n], limit);
                let xe = state_of(&y);
                if rules.record {
                    path.push(xe.clone());
                }
                return done(sign * (st.prev_tau + s), xe, limit, StopReason::ArcLimit, path);
            }
        }
        if rules.record {
            path.push(xs.clone());
        }
        if rules.stall_speed > 0.0 && st.derivative()[n] < rules.stall_speed {
            return done(sign * st.tau, xs, st.y[n], StopReason::Stalled, path);
        }
    }
    let arc = st.y[n];
    done(sign * st.tau, state_of(&st.y), arc, StopReason::Completed, path)
}

/// `ψ(x, t)`. Returns `x` unchanged for `t = 0`.
pub fn flow(field: &dyn FlowField, x: &Vector, t: f64, opts: &IntegratorOptions) -> Result<Vector> {
    if t == 0.0 {
        return Ok(x.clone());
    }
    Ok(run_flow(field, x, t, opts, &StopRules::default())?.state)
}

/// Flowline from `x` over signed time `t`, sampled at accepted steps.
pub fn flowline(field: &dyn FlowField, x: &Vector, t: f64, opts: &IntegratorOptions) -> Result<Vec<Vector>> {
    let rules = StopRules {
        record: true,
        ..StopRules::default()
    };
    Ok(run_flow(field, x, t, opts, &rules)?.path)
}

/// Flowline from `x` traced until it has the given arclength (or stalls).
pub fn flowline_of_length(field: &dyn FlowField, x: &Vector, length: f64, t_max: f64, opts: &IntegratorOptions) -> Result<FlowRun> {
    let rules = StopRules {
        arc_limit: Some(length),
        stall_speed: 1e-12,
        record: true,
        ..StopRules::default()
    };
    run_flow(field, x, t_max, opts, &rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::vector;

    #[test]
    fn linear_decay_matches_exponential() {
        let f = BuiltinField::LinearRadial { rate: 1.0, dim: 2 };
        let y = flow(&f, &vector(&[1.0, 0.0]), 2f64.ln(), &IntegratorOptions::default()).unwrap();
        assert!((y - vector(&[0.5, 0.0])).norm() < 1e-8);
    }

    #[test]
    fn zero_time_is_identity() {
        let f = BuiltinField::DoubleWell;
        let x = vector(&[0.123456789, -0.987654321]);
        assert_eq!(flow(&f, &x, 0.0, &IntegratorOptions::default()).unwrap(), x);
    }

    #[test]
    fn double_well_flows_to_right_attractor() {
        let f = BuiltinField::DoubleWell;
        let y = flow(&f, &vector(&[0.5, 0.0]), 40.0, &IntegratorOptions::default()).unwrap();
        assert!((y - vector(&[1.0, 0.0])).norm() < 1e-6);
    }

    #[test]
    fn arclength_of_radial_flow() {
        let f = BuiltinField::LinearRadial { rate: 1.0, dim: 2 };
        let run = run_flow(&f, &vector(&[0.0, 2.0]), 1.0, &IntegratorOptions::default(), &StopRules::default()).unwrap();
        assert!((run.arclength - 2.0 * (1.0 - (-1f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn arc_limit_is_located() {
        let f = BuiltinField::Constant { b: vec![2.0, 0.0] };
        let rules = StopRules {
            arc_limit: Some(1.5),
            ..StopRules::default()
        };
        let run = run_flow(&f, &vector(&[0.0, 0.0]), 10.0, &IntegratorOptions::default(), &rules).unwrap();
        assert_eq!(run.stop, StopReason::ArcLimit);
        assert!((run.state[0] - 1.5).abs() < 1e-10);
        assert!((run.time - 0.75).abs() < 1e-10);
    }

    #[test]
    fn backward_blow_up_is_divergence() {
        let f = BuiltinField::DoubleWell;
        let err = flow(&f, &vector(&[2.0, 0.0]), -10.0, &IntegratorOptions::default()).unwrap_err();
        match err {
            Error::Divergence { time, .. } => assert!(time < 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
