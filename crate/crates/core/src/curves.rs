//! Polyline curves.
//!
//! A [`Curve`] is an ordered node list standing in for an unparameterized
//! oriented curve. Every integral over a curve uses one midpoint sample per
//! chord. [`ArcCurve`] is the equally spaced resampling used by the minimizer.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::space::{pairwise_sum, Vector};

/// Junction tolerance for [`concat`].
pub const JUNCTION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    nodes: Vec<Vector>,
}

impl Curve {
    /// Builds a curve, rejecting fewer than two nodes, mixed dimensions and
    /// non-finite coordinates. Zero total length is allowed here; operations
    /// that need positive length check it themselves.
    pub fn new(nodes: Vec<Vector>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidCurve(format!("need at least 2 nodes, got {}", nodes.len())));
        }
        let dim = nodes[0].len();
        if dim == 0 {
            return Err(Error::InvalidCurve("nodes have dimension 0".into()));
        }
        for (i, p) in nodes.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidCurve(format!(
                    "node {i} has dimension {} but node 0 has {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidCurve(format!("node {i} is not finite")));
            }
        }
        Ok(Self { nodes })
    }

    pub fn from_points(points: &[&[f64]]) -> Result<Self> {
        Self::new(points.iter().map(|p| Vector::from_column_slice(p)).collect())
    }

    /// Straight segment from `a` to `b` with `m` equally spaced nodes.
    pub fn segment(a: &Vector, b: &Vector, m: usize) -> Result<Self> {
        let m = m.max(2);
        Self::new(
            (0..m)
                .map(|i| {
                    let t = i as f64 / (m - 1) as f64;
                    if i == m - 1 {
                        b.clone()
                    } else {
                        a + (b - a) * t
                    }
                })
                .collect(),
        )
    }

    pub fn nodes(&self) -> &[Vector] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Vector> {
        self.nodes
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> &Vector {
        &self.nodes[0]
    }

    pub fn end(&self) -> &Vector {
        &self.nodes[self.nodes.len() - 1]
    }

    /// Chord midpoints and increments `(x_{i+1/2}, Δx_i)`.
    pub fn chords(&self) -> impl Iterator<Item = (Vector, Vector)> + '_ {
        self.nodes
            .windows(2)
            .map(|w| ((&w[0] + &w[1]) * 0.5, &w[1] - &w[0]))
    }

    pub fn chord_lengths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect()
    }

    pub fn cumulative_length(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.nodes.len());
        out.push(0.0);
        for w in self.nodes.windows(2) {
            acc += (&w[1] - &w[0]).norm();
            out.push(acc);
        }
        out
    }

    pub fn length(&self) -> f64 {
        curve_length(self)
    }

    /// Point at cumulative arclength `s`, linear on each chord.
    pub fn point_at_length(&self, s: f64) -> Vector {
        let cum = self.cumulative_length();
        point_on_polyline(&self.nodes, &cum, s)
    }

    /// Writes the CSV exchange format `i,x1,...,xn,s`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i");
        for k in 1..=self.dim() {
            let _ = write!(out, ",x{k}");
        }
        out.push_str(",s\n");
        for (i, (p, s)) in self.nodes.iter().zip(self.cumulative_length()).enumerate() {
            let _ = write!(out, "{i}");
            for v in p.iter() {
                let _ = write!(out, ",{v:e}");
            }
            let _ = writeln!(out, ",{s:e}");
        }
        out
    }

    /// Reads the CSV exchange format. The `s` column is ignored on input
    /// since it is recomputed from the nodes.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, message: "empty curve file".into() })?;
        let header = header?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let n = cols.len().saturating_sub(2);
        let header_ok = cols.len() >= 3
            && cols[0] == "i"
            && cols[cols.len() - 1] == "s"
            && (1..=n).all(|k| cols[k] == format!("x{k}"));
        if !header_ok {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header i,x1,...,xn,s but found `{}`", header.trim()),
            });
        }
        let mut nodes = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n + 2 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {} columns, found {}", n + 2, fields.len()),
                });
            }
            let coords = fields[1..=n]
                .iter()
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: idx + 1,
                        message: format!("bad number `{f}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            nodes.push(Vector::from_vec(coords));
        }
        Self::new(nodes)
    }
}

/// A curve resampled to equal chord spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcCurve {
    nodes: Vec<Vector>,
    cumulative_length: Vec<f64>,
}

impl ArcCurve {
    pub fn nodes(&self) -> &[Vector] {
        &self.nodes
    }

    pub fn cumulative_length(&self) -> &[f64] {
        &self.cumulative_length
    }

    pub fn total_length(&self) -> f64 {
        *self.cumulative_length.last().expect("nonempty")
    }

    pub fn spacing(&self) -> f64 {
        self.total_length() / (self.nodes.len() - 1) as f64
    }

    pub fn to_curve(&self) -> Curve {
        Curve { nodes: self.nodes.clone() }
    }

    pub fn into_curve(self) -> Curve {
        Curve { nodes: self.nodes }
    }
}

fn point_on_polyline(nodes: &[Vector], cum: &[f64], s: f64) -> Vector {
    let total = cum[cum.len() - 1];
    if s <= 0.0 {
        return nodes[0].clone();
    }
    if s >= total {
        return nodes[nodes.len() - 1].clone();
    }
    // First index with cum[j] > s; the chord is [j-1, j].
    let j = cum.partition_point(|&c| c <= s).clamp(1, nodes.len() - 1);
    let seg = cum[j] - cum[j - 1];
    if seg <= 0.0 {
        return nodes[j].clone();
    }
    let t = (s - cum[j - 1]) / seg;
    &nodes[j - 1] + (&nodes[j] - &nodes[j - 1]) * t
}

/// Chords are folded in mirrored pairs before summing, so reversing the
/// curve gives a bit-identical length.
pub fn curve_length(c: &Curve) -> f64 {
    let l = c.chord_lengths();
    let n = l.len();
    let mut folded: Vec<f64> = (0..n / 2).map(|i| l[i] + l[n - 1 - i]).collect();
    if n % 2 == 1 {
        folded.push(l[n / 2]);
    }
    pairwise_sum(&folded)
}

/// Resamples `c` to `m` nodes equally spaced in arclength along its polyline.
/// Endpoints are copied exactly.
pub fn reparameterize_arclength(c: &Curve, m: usize) -> Result<ArcCurve> {
    if m < 2 {
        return Err(Error::InvalidCurve(format!("need at least 2 output nodes, got {m}")));
    }
    let cum = c.cumulative_length();
    let total = cum[cum.len() - 1];
    if !(total > 0.0) {
        return Err(Error::DegenerateCurve);
    }
    let nodes: Vec<Vector> = (0..m)
        .map(|i| match i {
            0 => c.start().clone(),
            _ if i == m - 1 => c.end().clone(),
            _ => point_on_polyline(&c.nodes, &cum, total * i as f64 / (m - 1) as f64),
        })
        .collect();
    let cumulative_length = (0..m).map(|i| total * i as f64 / (m - 1) as f64).collect();
    Ok(ArcCurve { nodes, cumulative_length })
}

/// Length of the part of `c` inside a set, judged by chord midpoints.
pub fn restricted_length<P: Fn(&Vector) -> bool>(c: &Curve, indicator: P) -> f64 {
    let parts: Vec<f64> = c
        .chords()
        .map(|(mid, d)| if indicator(&mid) { d.norm() } else { 0.0 })
        .collect();
    pairwise_sum(&parts)
}

pub fn concat(a: &Curve, b: &Curve) -> Result<Curve> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidCurve(format!(
            "cannot join curves of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let gap = (a.end() - b.start()).norm();
    if gap > JUNCTION_TOL {
        return Err(Error::EndpointMismatch { gap });
    }
    let mut nodes = a.nodes.clone();
    nodes.extend(b.nodes.iter().skip(1).cloned());
    Ok(Curve { nodes })
}

pub fn reverse(c: &Curve) -> Curve {
    let mut nodes = c.nodes.clone();
    nodes.reverse();
    Curve { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(points: &[&[f64]]) -> Curve {
        Curve::from_points(points).unwrap()
    }

    #[test]
    fn lengths_of_simple_polylines() {
        assert_eq!(curve_length(&c(&[&[0.0, 0.0], &[1.0, 0.0]])), 1.0);
        assert_eq!(curve_length(&c(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]])), 2.0);
        assert_eq!(curve_length(&c(&[&[0.0, 0.0], &[0.0, 0.0]])), 0.0);
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        let nodes = vec![Vector::from_vec(vec![0.0, 0.0]), Vector::from_vec(vec![1.0])];
        assert!(matches!(Curve::new(nodes), Err(Error::InvalidCurve(_))));
    }

    #[test]
    fn uniform_split() {
        let a = reparameterize_arclength(&c(&[&[0.0, 0.0], &[2.0, 0.0]]), 3).unwrap();
        assert_eq!(a.nodes()[1], Vector::from_vec(vec![1.0, 0.0]));
        assert_eq!(a.nodes()[2], Vector::from_vec(vec![2.0, 0.0]));
    }

    #[test]
    fn corner_polyline_resamples_to_half_spacing() {
        let a = reparameterize_arclength(&c(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]]), 5).unwrap();
        for d in a.to_curve().chord_lengths() {
            assert!((d - 0.5).abs() < 1e-12);
        }
        assert_eq!(a.total_length(), 2.0);
    }

    #[test]
    fn two_node_resample_keeps_endpoints() {
        let curve = c(&[&[0.3, -1.0], &[0.2, 0.1], &[4.0, 2.0]]);
        let a = reparameterize_arclength(&curve, 2).unwrap();
        assert_eq!(&a.nodes()[0], curve.start());
        assert_eq!(&a.nodes()[1], curve.end());
    }

    #[test]
    fn zero_length_resample_fails() {
        let r = reparameterize_arclength(&c(&[&[1.0], &[1.0]]), 4);
        assert!(matches!(r, Err(Error::DegenerateCurve)));
    }

    #[test]
    fn restricted_half_segment() {
        let fine = reparameterize_arclength(&c(&[&[0.0, 0.0], &[2.0, 0.0]]), 201).unwrap();
        let len = restricted_length(&fine.to_curve(), |x| x[0] < 1.0);
        assert!((len - 1.0).abs() <= 0.01);
        let curve = fine.to_curve();
        assert_eq!(restricted_length(&curve, |_| true), curve_length(&curve));
        assert_eq!(restricted_length(&curve, |_| false), 0.0);
    }

    #[test]
    fn concat_and_reverse() {
        let a = c(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let b = c(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let j = concat(&a, &b).unwrap();
        assert_eq!(j, c(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0]]));
        assert_eq!(curve_length(&j), curve_length(&a) + curve_length(&b));
        assert_eq!(reverse(&a), c(&[&[1.0, 0.0], &[0.0, 0.0]]));
        let far = c(&[&[2.0, 0.0], &[3.0, 0.0]]);
        assert!(matches!(concat(&a, &far), Err(Error::EndpointMismatch { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let curve = c(&[&[0.0, 0.5], &[1.25, -3.0], &[2.0, 1e-17]]);
        let text = curve.to_csv();
        assert!(text.starts_with("i,x1,x2,s\n"));
        let back = Curve::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn csv_reports_bad_line() {
        let text = "i,x1,s\n0,0.0,0\n1,abc,1\n";
        match Curve::from_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
