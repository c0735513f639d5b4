//! State-space primitives shared by every module: vectors, boxes, sample grids.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or a tangent vector in state space.
pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn vector(coords: &[f64]) -> Vector {
    DVector::from_column_slice(coords)
}

/// Pairwise summation with a fixed split order, so parallel and serial
/// evaluation give bit-identical results.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Config("box bounds must have equal, positive dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::Config("box must satisfy lo < hi in every coordinate".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn around(center: &Vector, half_width: f64) -> Self {
        Self {
            lo: center.iter().map(|c| c - half_width).collect(),
            hi: center.iter().map(|c| c + half_width).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.contains_with_margin(x, 0.0)
    }

    pub fn contains_with_margin(&self, x: &Vector, margin: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= a - margin && *v <= b + margin)
    }

    pub fn clamp(&self, x: &Vector) -> (Vector, bool) {
        let mut clamped = false;
        let y = Vector::from_iterator(
            x.len(),
            x.iter().zip(self.lo.iter().zip(&self.hi)).map(|(v, (a, b))| {
                let c = v.clamp(*a, *b);
                if c != *v {
                    clamped = true;
                }
                c
            }),
        );
        (y, clamped)
    }

    pub fn expanded(&self, margin: f64) -> Self {
        Self {
            lo: self.lo.iter().map(|a| a - margin).collect(),
            hi: self.hi.iter().map(|b| b + margin).collect(),
        }
    }

    pub fn center(&self) -> Vector {
        Vector::from_iterator(self.dim(), self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)))
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Map a point of the unit cube onto the box.
    pub fn from_unit(&self, u: &[f64]) -> Vector {
        Vector::from_iterator(
            self.dim(),
            u.iter().zip(self.lo.iter().zip(&self.hi)).map(|(t, (a, b))| a + t * (b - a)),
        )
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vector {
        let u: Vec<f64> = (0..self.dim()).map(|_| rng.random::<f64>()).collect();
        self.from_unit(&u)
    }

    pub fn bounding(points: &[Vector]) -> Option<Self> {
        let first = points.first()?;
        let mut lo: Vec<f64> = first.iter().copied().collect();
        let mut hi = lo.clone();
        for p in points {
            for (k, v) in p.iter().enumerate() {
                lo[k] = lo[k].min(*v);
                hi[k] = hi[k].max(*v);
            }
        }
        Some(Self { lo, hi })
    }
}

/// Tensor grid with `counts[k]` points per axis, endpoints included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(bbox: &BoundingBox, counts: Vec<usize>) -> Self {
        Self {
            lo: bbox.lo.clone(),
            hi: bbox.hi.clone(),
            counts,
        }
    }

    pub fn uniform(bbox: &BoundingBox, per_axis: usize) -> Self {
        Self::new(bbox, vec![per_axis; bbox.dim()])
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() || self.lo.len() != self.counts.len() || self.lo.is_empty() {
            return Err(Error::Config("grid lo/hi/counts must share one dimension".into()));
        }
        if self.counts.contains(&0) {
            return Err(Error::Config("grid has an empty axis".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order (last axis fastest). Coordinates are
    /// computed as `lo + (hi - lo) * i / (count - 1)` so that grid nodes
    /// which should be exact (0, ±1, ...) are exact.
    pub fn points(&self) -> Vec<Vector> {
        let n = self.counts.len();
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; n];
        for _ in 0..self.len() {
            let p = Vector::from_iterator(
                n,
                (0..n).map(|k| {
                    let c = self.counts[k];
                    if c == 1 {
                        0.5 * (self.lo[k] + self.hi[k])
                    } else {
                        self.lo[k] + (self.hi[k] - self.lo[k]) * idx[k] as f64 / (c - 1) as f64
                    }
                }),
            );
            out.push(p);
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < self.counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }
}

/// Unit directions for sampling: exact angles in 1-D and 2-D, seeded
/// Gaussian directions otherwise.
pub fn unit_directions(dim: usize, count: usize, seed: u64) -> Vec<Vector> {
    match dim {
        1 => vec![vector(&[1.0]), vector(&[-1.0])],
        2 => (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                vector(&[a.cos(), a.sin()])
            })
            .collect(),
        _ => {
            let mut rng = crate::rng(seed);
            let mut dirs: Vec<Vector> = (0..dim)
                .flat_map(|k| {
                    let mut e = Vector::zeros(dim);
                    e[k] = 1.0;
                    [e.clone(), -e]
                })
                .collect();
            while dirs.len() < count.max(2 * dim) {
                dirs.push(random_unit(dim, &mut rng));
            }
            dirs
        }
    }
}

pub fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_iterator(dim, (0..dim).map(|_| gaussian(rng)));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

/// Standard normal deviate (Box-Muller).
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Halton low-discrepancy point `index` in `[0,1)^dim`.
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    (0..dim)
        .map(|k| {
            let base = PRIMES[k % PRIMES.len()];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index + 1;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

/// Central-difference Jacobian of `map` at `x`.
pub fn jacobian_fd<F: Fn(&Vector) -> Vector>(map: F, x: &Vector, h: f64) -> Matrix {
    let n = x.len();
    let m = map(x).len();
    let mut jac = Matrix::zeros(m, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (map(&xp) - map(&xm)) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

pub fn gradient_fd<F: Fn(&Vector) -> f64>(f: F, x: &Vector, h: f64) -> Vector {
    Vector::from_iterator(
        x.len(),
        (0..x.len()).map(|j| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        }),
    )
}

/// Serializes a vector as a plain JSON array.
pub fn ser_vec<S: serde::Serializer>(v: &Vector, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

pub fn ser_opt_vec<S: serde::Serializer>(v: &Option<Vector>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_seq(v.iter()),
        None => s.serialize_none(),
    }
}

pub fn check_dim(x: &Vector, dim: usize, what: &str) -> Result<()> {
    if x.len() != dim {
        return Err(Error::Config(format!(
            "{what} has dimension {} but {} was expected",
            x.len(),
            dim
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_exact_nodes() {
        let g = GridSpec::uniform(&BoundingBox::cube(2, 2.0), 41);
        let pts = g.points();
        assert_eq!(pts.len(), 41 * 41);
        assert!(pts.iter().any(|p| p[0] == -1.0 && p[1] == 0.0));
        assert!(pts.iter().any(|p| p[0] == 0.0 && p[1] == 0.0));
        assert_eq!(pts[0], vector(&[-2.0, -2.0]));
        assert_eq!(pts[1], vector(&[-2.0, -1.9]));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }

    #[test]
    fn halton_is_in_unit_cube() {
        for i in 0..100 {
            let h = halton(i, 3);
            assert!(h.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(BoundingBox::new(vec![1.0], vec![0.0]).is_err());
    }
}
