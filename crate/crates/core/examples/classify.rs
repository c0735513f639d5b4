//! Existence verdicts over a coarse grid of the double-well plane.

use std::sync::Arc;

use geoaction::actions::LocalAction;
use geoaction::criteria::{summarize, Classifier, ClassifyOptions};
use geoaction::fields::{BuiltinField, SharedField};
use geoaction::manifolds::{ManifoldConfig, Potential, Shape};
use geoaction::{BoundingBox, GridSpec};

fn main() -> geoaction::Result<()> {
    let field: SharedField = Arc::new(BuiltinField::DoubleWell);
    let action = LocalAction::sde_randers(field.clone());
    let domain = BoundingBox::cube(2, 2.0);
    let outer = BoundingBox::cube(2, 3.0);
    let shapes = [
        Shape::Sphere { center: vec![-1.0, 0.0], radius: 0.2 },
        Shape::Sphere { center: vec![1.0, 0.0], radius: 0.2 },
        Shape::LevelOfPotential { potential: Potential::DoubleWell, level: 2.0 },
    ];
    let manifolds = shapes
        .into_iter()
        .map(|shape| ManifoldConfig { name: None, shape, bbox: None, orientation: None }.build(2, &outer))
        .collect::<geoaction::Result<Vec<_>>>()?;

    let c = Classifier::new(field, action, &manifolds, &domain, ClassifyOptions::default())?;
    for (eq, v) in &c.equilibria {
        let v = v.as_ref().map(|v| v.verdict.as_str()).unwrap_or("-");
        println!("{:?} at {:?}: {v}", eq.kind, eq.location.as_slice());
    }
    let verdicts = c.classify_grid(&GridSpec::uniform(&domain, 9))?;
    println!("{:?}", summarize(&verdicts));
    Ok(())
}
