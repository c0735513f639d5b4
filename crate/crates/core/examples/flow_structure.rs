//! Equilibria, saddle separatrices and a limit cycle of built-in fields.

use geoaction::fields::{
    detect_limit_cycle, find_equilibria, trace_invariant_manifolds_2d, BuiltinField, EquilibriumKind, IntegratorOptions,
};
use geoaction::{vector, BoundingBox, GridSpec};

fn main() -> geoaction::Result<()> {
    let field = BuiltinField::three_basin();
    let domain = BoundingBox::cube(2, 2.0);
    let eqs = find_equilibria(&field, &domain, &GridSpec::uniform(&domain, 21))?;
    for e in &eqs {
        println!("{:?} at ({:+.6}, {:+.6})", e.kind, e.location[0], e.location[1]);
    }

    let opts = IntegratorOptions::default();
    for saddle in eqs.iter().filter(|e| e.kind == EquilibriumKind::Saddle) {
        for b in trace_invariant_manifolds_2d(&field, saddle, 5.0, 1.0, 1e3, &opts)? {
            let end = b.curve.end();
            println!(
                "  {:?} branch, side {:+}: length {:.3}, ends at ({:+.3}, {:+.3})",
                b.kind, b.side, b.arclength, end[0], end[1]
            );
        }
    }

    let cycle = detect_limit_cycle(&BuiltinField::LimitCycle, &vector(&[0.2, 0.0]), 200.0, &opts)?;
    println!("limit cycle: found {}, period {:?}", cycle.found, cycle.period);
    Ok(())
}
