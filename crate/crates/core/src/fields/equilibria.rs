//! Roots of the drift and their linear classification.

use rayon::prelude::*;
use serde::Serialize;

use super::FlowField;
use crate::error::{Error, Result};
use crate::space::{BoundingBox, GridSpec, Matrix, Vector};

pub const TOL_EQ: f64 = 1e-10;
pub const TOL_LAMBDA: f64 = 1e-8;
pub const TOL_DEDUP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Attractor,
    Repellor,
    Saddle,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Equilibrium {
    #[serde(serialize_with = "crate::space::ser_vec")]
    pub location: Vector,
    pub eigenvalues: Vec<Eigenvalue>,
    pub kind: EquilibriumKind,
}

impl Equilibrium {
    /// Classifies `location` from the Jacobian spectrum.
    pub fn classify(field: &dyn FlowField, location: Vector) -> Self {
        let jac = field.jacobian(&location);
        let eigenvalues = eigenvalues(&jac);
        let kind = kind_of(&eigenvalues);
        Self {
            location,
            eigenvalues,
            kind,
        }
    }
}

pub fn eigenvalues(m: &Matrix) -> Vec<Eigenvalue> {
    let mut out: Vec<Eigenvalue> = m
        .complex_eigenvalues()
        .iter()
        .map(|c| Eigenvalue { re: c.re, im: c.im })
        .collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

fn kind_of(eigs: &[Eigenvalue]) -> EquilibriumKind {
    if eigs.iter().any(|e| !e.re.is_finite() || e.re.abs() <= TOL_LAMBDA) {
        EquilibriumKind::Degenerate
    } else if eigs.iter().all(|e| e.re < 0.0) {
        EquilibriumKind::Attractor
    } else if eigs.iter().all(|e| e.re > 0.0) {
        EquilibriumKind::Repellor
    } else {
        EquilibriumKind::Saddle
    }
}

/// Damped Newton iteration for `b(x) = 0` from one seed.
fn newton_root(field: &dyn FlowField, seed: &Vector) -> Option<Vector> {
    let mut x = seed.clone();
    let mut r = field.drift(&x).norm();
    for _ in 0..60 {
        if r < TOL_EQ {
            return Some(x);
        }
        let jac = field.jacobian(&x);
        let step = jac.lu().solve(&(-field.drift(&x)))?;
        if !step.iter().all(|v| v.is_finite()) {
            return None;
        }
        let mut t = 1.0;
        loop {
            let trial = &x + &step * t;
            let rt = field.drift(&trial).norm();
            if rt < r || t < 1e-6 {
                x = trial;
                r = rt;
                break;
            }
            t *= 0.5;
        }
        if !r.is_finite() {
            return None;
        }
    }
    (r < TOL_EQ).then_some(x)
}

/// Equilibria inside `search_box`, found by Newton from every seed of the
/// grid. Seeds that fail to converge are skipped. Results are deduplicated
/// and sorted lexicographically so the list is independent of thread count.
pub fn find_equilibria(field: &dyn FlowField, search_box: &BoundingBox, seeds: &GridSpec) -> Result<Vec<Equilibrium>> {
    seeds.validate()?;
    if seeds.lo.len() != field.dim() || search_box.dim() != field.dim() {
        return Err(Error::Config("equilibrium search grid does not match the field dimension".into()));
    }
    let roots: Vec<Vector> = seeds
        .points()
        .par_iter()
        .filter_map(|s| newton_root(field, s))
        .filter(|x| search_box.contains_with_margin(x, 1e-9))
        .collect();
    let mut unique: Vec<Vector> = Vec::new();
    for r in roots {
        if unique.iter().all(|u| (u - &r).norm() > TOL_DEDUP) {
            unique.push(r);
        }
    }
    unique.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(unique.into_iter().map(|x| Equilibrium::classify(field, x)).collect())
}

/// Unit eigenvector of a real eigenvalue of a 2×2 matrix.
pub fn eigenvector_2d(m: &Matrix, lambda: f64) -> Option<Vector> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let v1 = Vector::from_vec(vec![b, lambda - a]);
    let v2 = Vector::from_vec(vec![lambda - d, c]);
    let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
    let n = v.norm();
    if n < 1e-14 {
        // Diagonal block with a repeated eigenvalue: any axis works, pick
        // the one whose diagonal entry matches.
        return if (a - lambda).abs() <= (d - lambda).abs() {
            Some(Vector::from_vec(vec![1.0, 0.0]))
        } else {
            Some(Vector::from_vec(vec![0.0, 1.0]))
        };
    }
    // Fix the sign so the dominant component is positive.
    let s = if v[0].abs() >= v[1].abs() { v[0].signum() } else { v[1].signum() };
    Some(v * (s / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BuiltinField;
    use crate::space::vector;

    #[test]
    fn double_well_has_three_equilibria() {
        let bbox = BoundingBox::cube(2, 2.0);
        let eqs = find_equilibria(&BuiltinField::DoubleWell, &bbox, &GridSpec::uniform(&bbox, 9)).unwrap();
        let kinds: Vec<_> = eqs.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![EquilibriumKind::Attractor, EquilibriumKind::Saddle, EquilibriumKind::Attractor]
        );
        for (e, x) in eqs.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((&e.location - vector(&[x, 0.0])).norm() < 1e-10);
        }
    }

    #[test]
    fn radial_attractor_spectrum() {
        let bbox = BoundingBox::cube(2, 1.0);
        let eqs = find_equilibria(&BuiltinField::LinearRadial { rate: 1.0, dim: 2 }, &bbox, &GridSpec::uniform(&bbox, 3)).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].kind, EquilibriumKind::Attractor);
        for e in &eqs[0].eigenvalues {
            assert!((e.re + 1.0).abs() < 1e-12 && e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_no_roots() {
        let bbox = BoundingBox::cube(2, 1.0);
        let f = BuiltinField::Constant { b: vec![1.0, 0.0] };
        assert!(find_equilibria(&f, &bbox, &GridSpec::uniform(&bbox, 5)).unwrap().is_empty());
    }

    #[test]
    fn limit_cycle_center_is_a_repellor() {
        let bbox = BoundingBox::cube(2, 0.5);
        let eqs = find_equilibria(&BuiltinField::LimitCycle, &bbox, &GridSpec::uniform(&bbox, 3)).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].kind, EquilibriumKind::Repellor);
    }

    #[test]
    fn eigenvectors_of_saddle() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(eigenvector_2d(&m, 1.0).unwrap(), vector(&[1.0, 0.0]));
        assert_eq!(eigenvector_2d(&m, -1.0).unwrap(), vector(&[0.0, 1.0]));
        let m = Matrix::from_row_slice(2, 2, &[0.0, 2.0, 1.0, 1.0]);
        let v = eigenvector_2d(&m, 2.0).unwrap();
        assert!((&m * &v - &v * 2.0).norm() < 1e-12);
    }
}
