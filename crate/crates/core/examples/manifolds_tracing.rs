//! Admissibility of level sets and a flowline tracing function around an
//! attracting well.

use std::sync::Arc;

use geoaction::fields::{BuiltinField, SharedField};
use geoaction::manifolds::{check_admissible, tracing_from_manifold, ManifoldConfig, Potential, Shape, TracingOptions};
use geoaction::{vector, BoundingBox};

fn config(shape: Shape) -> ManifoldConfig {
    ManifoldConfig {
        name: None,
        shape,
        bbox: None,
        orientation: None,
    }
}

fn main() -> geoaction::Result<()> {
    let fallback = BoundingBox::cube(2, 3.0);
    let dw: SharedField = Arc::new(BuiltinField::DoubleWell);
    let level = config(Shape::LevelOfPotential {
        potential: Potential::DoubleWell,
        level: 0.1,
    })
    .build(2, &fallback)?;
    let r = check_admissible(&level, dw.as_ref(), 64, 1)?;
    println!("V = 0.1 level set: pass {}, min cosine {:.4}", r.pass, r.min_cosine);

    // A circle through the unit limit cycle is crossed both ways.
    let loop_m = config(Shape::Sphere {
        center: vec![1.0, 0.0],
        radius: 0.5,
    })
    .build(2, &fallback)?;
    let r = check_admissible(&loop_m, &BuiltinField::LimitCycle, 64, 1)?;
    println!("loop across the cycle: pass {}, sign flip {:?}", r.pass, r.sign_flip_pair);

    let well = config(Shape::Sphere {
        center: vec![1.0, 0.0],
        radius: 0.2,
    })
    .build(2, &fallback)?;
    let opts = TracingOptions {
        samples: 500,
        ..TracingOptions::default()
    };
    let t = tracing_from_manifold(&well, dw, 0.05, &opts)?;
    println!(
        "tracing function: q = ({}, {}), H = {:.3}, G = {:.3}, residual {:.2e}",
        t.q1, t.q2, t.grad_bound, t.min_drift, t.tracing_residual
    );
    println!("f(1.25, 0) = {:.6}", t.eval(&vector(&[1.25, 0.0]))?);
    Ok(())
}
