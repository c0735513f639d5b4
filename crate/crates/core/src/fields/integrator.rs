//! Adaptive Dormand–Prince 5(4) integrator for autonomous systems.
//!
//! Time runs forward internally; backward flows are integrated by negating
//! the right-hand side. Events are located by bisection on a single
//! re-taken step from the last accepted state, which keeps the located state
//! within the step's own error tolerance without needing dense output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Vector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// State norm beyond which the flow is declared divergent.
    pub bound: f64,
    pub max_steps: usize,
    pub h_max: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            bound: 1e8,
            max_steps: 2_000_000,
            h_max: f64::INFINITY,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combo(y: &Vector, h: f64, coeffs: &[f64], ks: &[Vector]) -> Vector {
    let mut out = y.clone();
    for (c, k) in coeffs.iter().zip(ks) {
        if *c != 0.0 {
            out.axpy(h * c, k, 1.0);
        }
    }
    out
}

/// Adaptive stepper state. `prev_*` hold the state before the last accepted
/// step so that callers can locate events inside it.
pub struct Stepper<F> {
    rhs: F,
    opts: IntegratorOptions,
    /// Sign used only when reporting times to callers.
    time_sign: f64,
    pub tau: f64,
    pub y: Vector,
    k1: Vector,
    pub prev_tau: f64,
    pub prev_y: Vector,
    prev_k1: Vector,
    h: f64,
    steps: usize,
}

impl<F: Fn(&Vector) -> Vector> Stepper<F> {
    pub fn new(rhs: F, y0: Vector, opts: &IntegratorOptions, time_sign: f64) -> Self {
        let k1 = rhs(&y0);
        let h = initial_step(&rhs, &y0, &k1, opts);
        Self {
            rhs,
            opts: opts.clone(),
            time_sign,
            tau: 0.0,
            prev_tau: 0.0,
            prev_y: y0.clone(),
            prev_k1: k1.clone(),
            y: y0,
            k1,
            h,
            steps: 0,
        }
    }

    /// One Dormand–Prince step without error control: returns the fifth
    /// order solution, the error estimate and the derivative at the new point.
    fn attempt(&self, y: &Vector, k1: &Vector, h: f64) -> (Vector, Vector, Vector) {
        let f = &self.rhs;
        let mut ks: Vec<Vector> = Vec::with_capacity(7);
        ks.push(k1.clone());
        ks.push(f(&combo(y, h, &A2, &ks)));
        ks.push(f(&combo(y, h, &A3, &ks)));
        ks.push(f(&combo(y, h, &A4, &ks)));
        ks.push(f(&combo(y, h, &A5, &ks)));
        ks.push(f(&combo(y, h, &A6, &ks)));
        let y_new = combo(y, h, &B, &ks);
        ks.push(f(&y_new));
        let err = combo(&Vector::zeros(y.len()), h, &E, &ks);
        (y_new, err, ks.pop().expect("seven stages"))
    }

    fn error_norm(&self, y: &Vector, y_new: &Vector, err: &Vector) -> f64 {
        let n = y.len() as f64;
        let s: f64 = (0..y.len())
            .map(|i| {
                let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y_new[i].abs());
                (err[i] / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    }

    /// Advances by one accepted step without passing `tau_end`.
    pub fn step(&mut self, tau_end: f64) -> Result<()> {
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(Error::SolverFailure {
                    what: format!("integrator step budget ({}) exhausted", self.opts.max_steps),
                    residual: self.tau,
                });
            }
            self.steps += 1;
            let remaining = tau_end - self.tau;
            let mut h = self.h.min(self.opts.h_max);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let (y_new, err, k_new) = self.attempt(&self.y, &self.k1, h);
            let e = self.error_norm(&self.y, &y_new, &err);
            if !e.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                self.h = 0.2 * h;
                if self.h < 1e-14 * self.tau.abs().max(1.0) {
                    return Err(Error::Divergence {
                        time: self.time_sign * self.tau,
                        norm: f64::INFINITY,
                    });
                }
                continue;
            }
            let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
            if e <= 1.0 {
                self.prev_tau = self.tau;
                self.prev_y = std::mem::replace(&mut self.y, y_new);
                self.prev_k1 = std::mem::replace(&mut self.k1, k_new);
                self.tau = if last { tau_end } else { self.tau + h };
                // A step clipped to `tau_end` says little about the natural
                // step size, so it may only grow the proposal.
                self.h = if last { self.h.max(h * factor) } else { h * factor };
                let norm = self.y.norm();
                if norm > self.opts.bound {
                    return Err(Error::Divergence {
                        time: self.time_sign * self.tau,
                        norm,
                    });
                }
                return Ok(());
            }
            self.h = h * factor;
            if self.h < 1e-14 * self.tau.abs().max(1.0) {
                return Err(Error::SolverFailure {
                    what: "integrator step size underflow".into(),
                    residual: e,
                });
            }
        }
    }

    /// State at `prev_tau + s` for `0 <= s <= tau - prev_tau`, by one
    /// re-taken step from the previous accepted state.
    pub fn state_within(&self, s: f64) -> Vector {
        if s <= 0.0 {
            return self.prev_y.clone();
        }
        self.attempt(&self.prev_y, &self.prev_k1, s).0
    }

    /// Locates a root of `g` inside the last step, assuming `g(prev_y)` and
    /// `g(y)` bracket it. Returns the time offset from `prev_tau` and state.
    pub fn locate<G: Fn(&Vector) -> f64>(&self, g: G) -> (f64, Vector) {
        let h = self.tau - self.prev_tau;
        let (mut a, mut b) = (0.0, h);
        let (mut ga, mut gb) = (g(&self.prev_y), g(&self.y));
        if ga == 0.0 {
            return (0.0, self.prev_y.clone());
        }
        if gb == 0.0 {
            return (h, self.y.clone());
        }
        // Illinois variant of regula falsi, with a bisection fallback.
        let mut side = 0i8;
        for _ in 0..200 {
            let mut s = (a * gb - b * ga) / (gb - ga);
            if !(s > a && s < b) {
                s = 0.5 * (a + b);
            }
            let ys = self.state_within(s);
            let gs = g(&ys);
            if gs == 0.0 || (b - a) <= 1e-15 * h.max(1e-300) {
                return (s, ys);
            }
            if (gs > 0.0) == (ga > 0.0) {
                a = s;
                ga = gs;
                if side == -1 {
                    gb *= 0.5;
                }
                side = -1;
            } else {
                b = s;
                gb = gs;
                if side == 1 {
                    ga *= 0.5;
                }
                side = 1;
            }
            if (b - a).abs() < 1e-14 * (1.0 + self.prev_tau.abs()) {
                let m = 0.5 * (a + b);
                return (m, self.state_within(m));
            }
        }
        let m = 0.5 * (a + b);
        (m, self.state_within(m))
    }

    /// Finds `s` in the last step with `value(state(s)) = target`, where
    /// `value` is increasing along the step (used for arclength budgets).
    pub fn locate_level<G: Fn(&Vector) -> f64>(&self, value: G, target: f64) -> (f64, Vector) {
        self.locate(|y| value(y) - target)
    }

    pub fn derivative(&self) -> &Vector {
        &self.k1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

fn initial_step<F: Fn(&Vector) -> Vector>(rhs: &F, y0: &Vector, f0: &Vector, opts: &IntegratorOptions) -> f64 {
    let sc = |v: &Vector| -> f64 {
        let n = v.len() as f64;
        let s: f64 = v
            .iter()
            .zip(y0.iter())
            .map(|(vi, yi)| (vi / (opts.atol + opts.rtol * yi.abs())).powi(2))
            .sum();
        (s / n).sqrt()
    };
    let d0 = sc(y0);
    let d1 = sc(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = y0 + f0 * h0;
    let f1 = rhs(&y1);
    let d2 = sc(&(&f1 - f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let h = (100.0 * h0).min(h1).min(opts.h_max);
    if h.is_finite() && h > 0.0 {
        h
    } else {
        1e-6
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_accurate() {
        let opts = IntegratorOptions::default();
        let mut st = Stepper::new(|y: &Vector| -y, Vector::from_vec(vec![1.0]), &opts, 1.0);
        let t = 3.0;
        while st.tau < t {
            st.step(t).unwrap();
        }
        assert!((st.y[0] - (-t).exp()).abs() < 1e-10);
    }

    #[test]
    fn event_location_hits_crossing_time() {
        let opts = IntegratorOptions::default();
        let mut st = Stepper::new(|_: &Vector| Vector::from_vec(vec![1.0]), Vector::from_vec(vec![0.0]), &opts, 1.0);
        loop {
            st.step(10.0).unwrap();
            if st.y[0] >= 0.7 {
                let (s, y) = st.locate(|y| y[0] - 0.7);
                assert!((st.prev_tau + s - 0.7).abs() < 1e-12);
                assert!((y[0] - 0.7).abs() < 1e-12);
                break;
            }
        }
    }

    #[test]
    fn blow_up_reports_divergence() {
        let opts = IntegratorOptions {
            bound: 1e6,
            ..IntegratorOptions::default()
        };
        let mut st = Stepper::new(|y: &Vector| y.map(|v| v * v), Vector::from_vec(vec![1.0]), &opts, 1.0);
        let mut err = None;
        for _ in 0..100_000 {
            if let Err(e) = st.step(2.0) {
                err = Some(e);
                break;
            }
        }
        match err {
            Some(Error::Divergence { time, .. }) => assert!(time > 0.99 && time < 1.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
