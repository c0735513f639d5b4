//! Minimum action curve between the double-well attractors from a bent
//! initial curve, and where it crosses the separatrix.

use std::sync::Arc;

use geoaction::actions::LocalAction;
use geoaction::curves::Curve;
use geoaction::fields::{BuiltinField, SharedField};
use geoaction::minimizer::{hitting_report, minimize_from, EndpointSet, MinimizeProblem, SolverOptions};
use geoaction::{vector, BoundingBox};

fn main() -> geoaction::Result<()> {
    let field: SharedField = Arc::new(BuiltinField::DoubleWell);
    let p = MinimizeProblem {
        action: LocalAction::sde_randers(field),
        start: EndpointSet::Point(vector(&[-1.0, 0.0])),
        end: EndpointSet::Point(vector(&[1.0, 0.0])),
        bbox: BoundingBox::cube(2, 2.0),
        opts: SolverOptions { nodes: 200, max_iters: 3000, ..SolverOptions::default() },
    };
    let bent = Curve::new(
        (0..200)
            .map(|i| {
                let t = i as f64 / 199.0;
                vector(&[2.0 * t - 1.0, 0.6 * (std::f64::consts::PI * t).sin()])
            })
            .collect(),
    )?;
    let r = minimize_from(&p, &bent)?;
    println!(
        "seed action {:.5} -> {:.5} in {} iterations ({:?}); exact value 0.5",
        r.seed_action, r.action_value, r.iterations, r.stop
    );

    let separatrix = Curve::segment(&vector(&[0.0, -2.0]), &vector(&[0.0, 2.0]), 2)?;
    let h = hitting_report(&r.curve.to_curve(), &separatrix, &[vector(&[0.0, 0.0])], 0.02, 0.05);
    println!("first/last hitting distance to the saddle: {:?} / {:?}", h.first_distance, h.last_distance);
    Ok(())
}
