//! Stable and unstable manifolds of planar saddles.

use serde::Serialize;

use super::equilibria::eigenvector_2d;
use super::{run_flow, Equilibrium, EquilibriumKind, FlowField, IntegratorOptions, StopReason, StopRules};
use crate::curves::Curve;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    Stable,
    Unstable,
}

#[derive(Clone, Debug)]
pub struct ManifoldBranch {
    pub kind: BranchKind,
    /// +1 or −1: which side of the saddle along the eigenvector.
    pub side: f64,
    /// Starts at the saddle itself.
    pub curve: Curve,
    pub arclength: f64,
    pub stop: StopReason,
}

/// Offset of the seeds from the saddle, relative to the length scale.
pub const SEED_OFFSET: f64 = 1e-6;

/// Traces the four branches of a planar saddle: two unstable branches
/// integrated forward, then two stable branches integrated backward. Each
/// branch stops at `arc_budget` arclength, or earlier when it stalls at
/// another equilibrium, exhausts `t_max` or diverges.
pub fn trace_invariant_manifolds_2d(
    field: &dyn FlowField,
    saddle: &Equilibrium,
    arc_budget: f64,
    scale: f64,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<Vec<ManifoldBranch>> {
    if field.dim() != 2 {
        return Err(Error::Precondition("invariant manifolds are traced only in two dimensions".into()));
    }
    if saddle.kind != EquilibriumKind::Saddle {
        return Err(Error::Precondition(format!("expected a saddle, got {:?}", saddle.kind)));
    }
    let jac = field.jacobian(&saddle.location);
    let (lo, hi) = (saddle.eigenvalues[0], saddle.eigenvalues[1]);
    if lo.im != 0.0 || hi.im != 0.0 {
        return Err(Error::DegenerateSaddle("complex eigenvalues at a saddle".into()));
    }
    let v_stable = eigenvector_2d(&jac, lo.re).ok_or_else(|| Error::DegenerateSaddle("no stable eigenvector".into()))?;
    let v_unstable = eigenvector_2d(&jac, hi.re).ok_or_else(|| Error::DegenerateSaddle("no unstable eigenvector".into()))?;
    let cross = v_stable[0] * v_unstable[1] - v_stable[1] * v_unstable[0];
    if cross.abs() < 1e-10 {
        return Err(Error::DegenerateSaddle("stable and unstable eigenvectors are parallel".into()));
    }
    let delta = SEED_OFFSET * scale;
    let mut out = Vec::with_capacity(4);
    for (kind, v, dir) in [
        (BranchKind::Unstable, &v_unstable, 1.0),
        (BranchKind::Stable, &v_stable, -1.0),
    ] {
        for side in [1.0, -1.0] {
            let seed = &saddle.location + v * (side * delta);
            let rules = StopRules {
                arc_limit: Some(arc_budget - delta),
                stall_speed: 1e-12,
                record: true,
                ..StopRules::default()
            };
            let (path, arc, stop) = match run_flow(field, &seed, dir * t_max, opts, &rules) {
                Ok(run) => (run.path, run.arclength, run.stop),
                // A branch escaping to infinity before the budget is still a
                // valid (truncated) branch; keep what was traced.
                Err(Error::Divergence { .. }) => {
                    let rules = StopRules {
                        arc_limit: Some(arc_budget - delta),
                        stall_speed: 1e-12,
                        record: true,
                        ..StopRules::default()
                    };
                    let mut bounded = opts.clone();
                    bounded.bound = f64::INFINITY;
                    let run = run_flow(field, &seed, dir * 1.0, &bounded, &rules)?;
                    (run.path, run.arclength, run.stop)
                }
                Err(e) => return Err(e),
            };
            let mut nodes = Vec::with_capacity(path.len() + 1);
            nodes.push(saddle.location.clone());
            nodes.extend(path);
            out.push(ManifoldBranch {
                kind,
                side,
                curve: Curve::new(nodes)?,
                arclength: arc + delta,
                stop,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BuiltinField;
    use crate::space::vector;

    #[test]
    fn double_well_branches_follow_the_axes() {
        let f = BuiltinField::DoubleWell;
        let saddle = Equilibrium::classify(&f, vector(&[0.0, 0.0]));
        let branches = trace_invariant_manifolds_2d(&f, &saddle, 1.5, 1.0, 1e3, &IntegratorOptions::default()).unwrap();
        assert_eq!(branches.len(), 4);
        for b in &branches {
            let (along, across) = match b.kind {
                BranchKind::Unstable => (0, 1),
                BranchKind::Stable => (1, 0),
            };
            let max_across = b.curve.nodes().iter().map(|p| p[across].abs()).fold(0.0, f64::max);
            assert!(max_across < 1e-6);
            assert_eq!(b.curve.end()[along].signum(), b.side);
        }
        // Stable branches reach the budget; unstable ones stall at (±1, 0).
        for b in branches.iter().filter(|b| b.kind == BranchKind::Stable) {
            assert_eq!(b.stop, StopReason::ArcLimit);
            assert!((b.arclength - 1.5).abs() < 1e-9);
            assert!((b.curve.end()[1].abs() - 1.5).abs() < 1e-8);
        }
        for b in branches.iter().filter(|b| b.kind == BranchKind::Unstable) {
            assert!((b.curve.end()[0].abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn attractor_is_rejected() {
        let f = BuiltinField::DoubleWell;
        let eq = Equilibrium::classify(&f, vector(&[1.0, 0.0]));
        assert!(trace_invariant_manifolds_2d(&f, &eq, 1.0, 1.0, 10.0, &IntegratorOptions::default()).is_err());
    }
}
