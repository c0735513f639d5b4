//! Pointwise verdicts on whether minimizers exist locally, and their
//! classification over a grid.
//!
//! A point is tested in a fixed order: positivity of the local action,
//! membership in a limit cycle, membership in the flow-out of an admissible
//! manifold, and finally the equilibrium criteria. Verdicts certify the
//! hypotheses of the existence results numerically; they are advisory.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{is_critical_point, Hamiltonian, LocalAction};
use crate::error::{Error, Result};
use crate::fields::{
    detect_limit_cycle, find_equilibria, flow, trace_invariant_manifolds_2d, Eigenvalue, Equilibrium, EquilibriumKind,
    FlowField, IntegratorOptions, SharedField,
};
use crate::manifolds::{check_admissible, flow_coordinates, AdmissibilityReport, Manifold};
use crate::space::{unit_directions, BoundingBox, GridSpec, Vector};

/// Threshold below which the local action counts as vanishing.
pub const TOL_POS: f64 = 1e-8;
/// Minimal log–log slope accepted as Hölder decay of the local action.
pub const DELTA_MIN: f64 = 0.1;
pub const HOLDER_R2: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Strong,
    Weak,
    NoneApplicable,
    NonExistence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Prop0,
    Prop1,
    Prop2Attractor,
    Prop2Repellor,
    Prop2Saddle,
    LimitCycleNegative,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Strong => "strong",
            Self::Weak => "weak",
            Self::NoneApplicable => "none-applicable",
            Self::NonExistence => "non-existence",
        }
    }
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Prop0 => "prop0",
            Self::Prop1 => "prop1",
            Self::Prop2Attractor => "prop2-attractor",
            Self::Prop2Repellor => "prop2-repellor",
            Self::Prop2Saddle => "prop2-saddle",
            Self::LimitCycleNegative => "limit-cycle-negative",
        }
    }
}

/// Log–log fit of `max ℓ(w, y)` over `|w − x| = r`, `|y| = 1` against `r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderFit {
    pub slope: f64,
    pub r_squared: f64,
    pub radii: Vec<f64>,
    pub maxima: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Evidence {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossing_time: Option<f64>,
    /// `|f_M|` at the located crossing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossing_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<Eigenvalue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holder: Option<HolderFit>,
    /// Manifold crossed by each invariant branch of a saddle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_manifolds: Option<Vec<Option<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_point: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriteriaVerdict {
    pub point: Vec<f64>,
    pub verdict: Verdict,
    pub criterion: Option<Criterion>,
    pub evidence: Evidence,
}

impl CriteriaVerdict {
    fn new(x: &Vector, verdict: Verdict, criterion: Option<Criterion>, evidence: Evidence) -> Self {
        Self {
            point: x.iter().copied().collect(),
            verdict,
            criterion,
            evidence,
        }
    }

    pub fn has_minimizers(&self) -> bool {
        matches!(self.verdict, Verdict::Strong | Verdict::Weak)
    }
}

/// Strong verdict when the local action is positive in every direction.
/// Hamiltonian actions use the exact test `H(x, 0) < 0`; for the others the
/// sampled directions are supplemented by the drift direction, along which
/// drift-based actions vanish.
pub fn check_prop0(a: &LocalAction, x: &Vector, directions: usize) -> Result<Option<CriteriaVerdict>> {
    if directions < 8 {
        return Err(Error::Config(format!("check_prop0 needs at least 8 directions, got {directions}")));
    }
    let margin = match a {
        LocalAction::Hamiltonian { hamiltonian, .. } => -hamiltonian.value(x, &Vector::zeros(x.len())),
        _ => {
            let mut ys = unit_directions(x.len(), directions, 0);
            if let Some(f) = a.drift() {
                let b = f.drift(x);
                let n = b.norm();
                if n > 0.0 {
                    ys.push(b / n);
                }
            }
            let mut m = f64::INFINITY;
            for y in &ys {
                match a.eval(x, y) {
                    Ok(v) => m = m.min(v),
                    Err(Error::Domain(_)) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            m
        }
    };
    Ok((margin > TOL_POS).then(|| {
        CriteriaVerdict::new(
            x,
            Verdict::Strong,
            Some(Criterion::Prop0),
            Evidence {
                margin: Some(margin),
                ..Evidence::default()
            },
        )
    }))
}

/// Strong verdict when the flowline through `x` meets one of the manifolds
/// within `|t| ≤ t_max`. The manifolds are assumed admissible.
pub fn check_prop1(
    f: &dyn FlowField,
    manifolds: &[Manifold],
    x: &Vector,
    t_max: f64,
    opts: &IntegratorOptions,
) -> Result<Option<CriteriaVerdict>> {
    // Flowlines through admissible manifolds never contain equilibria.
    if f.drift(x).norm() < 1e-12 {
        return Ok(None);
    }
    for m in manifolds {
        match flow_coordinates(m, f, x, t_max, opts) {
            Ok(c) => {
                let ev = Evidence {
                    manifold: Some(m.name.clone()),
                    crossing_time: Some(c.t),
                    crossing_residual: Some(m.raw_level(&c.z).abs()),
                    ..Evidence::default()
                };
                return Ok(Some(CriteriaVerdict::new(x, Verdict::Strong, Some(Criterion::Prop1), ev)));
            }
            Err(Error::NotReachable { .. }) | Err(Error::SolverFailure { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Fits `max ℓ(w, y) ≈ C rᵟ` over `radii` log-spaced radii in
/// `[10⁻⁴, 10⁻¹]·scale`.
pub fn holder_fit(a: &LocalAction, x: &Vector, scale: f64, radii: usize, directions: usize) -> Result<HolderFit> {
    let n = x.len();
    let radii_v: Vec<f64> = (0..radii)
        .map(|k| scale * 10f64.powf(-4.0 + 3.0 * k as f64 / (radii.max(2) - 1) as f64))
        .collect();
    let ws = unit_directions(n, directions, 1);
    let ys = unit_directions(n, directions, 2);
    let maxima: Vec<f64> = radii_v
        .par_iter()
        .map(|r| {
            let mut m: f64 = 0.0;
            for u in &ws {
                let w = x + u * *r;
                let mut dirs = ys.clone();
                if let Some(f) = a.drift() {
                    let b = f.drift(&w);
                    if b.norm() > 0.0 {
                        dirs.push(-&b / b.norm());
                    }
                }
                for y in &dirs {
                    m = m.max(a.eval(&w, y)?);
                }
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    if maxima.iter().all(|m| *m <= 0.0) {
        // The action vanishes identically near x: any exponent works.
        return Ok(HolderFit {
            slope: f64::INFINITY,
            r_squared: 1.0,
            radii: radii_v,
            maxima,
            pass: true,
        });
    }
    let pts: Vec<(f64, f64)> = radii_v
        .iter()
        .zip(&maxima)
        .filter(|(_, m)| **m > 0.0)
        .map(|(r, m)| (r.ln(), m.ln()))
        .collect();
    if pts.len() < 3 {
        return Ok(HolderFit {
            slope: f64::NAN,
            r_squared: 0.0,
            radii: radii_v,
            maxima,
            pass: false,
        });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(HolderFit {
        slope,
        r_squared,
        radii: radii_v,
        maxima,
        pass: slope >= DELTA_MIN && r_squared >= HOLDER_R2,
    })
}

/// For a Hamiltonian with Hölder data the decay condition at `x` holds
/// exactly when `x` is a critical point.
pub fn check_holder(h: &dyn Hamiltonian, x: &Vector) -> bool {
    is_critical_point(h, x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prop2Options {
    pub scale: f64,
    pub holder_radii: usize,
    pub directions: usize,
    /// Arclength budget per invariant branch of a saddle.
    pub arc_budget: f64,
    pub t_max: f64,
    /// Whether the state-constraint condition near the point holds; true
    /// for the unconstrained state space.
    pub e_condition: bool,
    pub integrator: IntegratorOptions,
}

impl Default for Prop2Options {
    fn default() -> Self {
        Self {
            scale: 1.0,
            holder_radii: 8,
            directions: 16,
            arc_budget: 10.0,
            t_max: 1e3,
            e_condition: true,
            integrator: IntegratorOptions::default(),
        }
    }
}

/// Equilibrium criterion: attractors and repellors have weak local
/// minimizers; saddles need every invariant branch to cross a manifold.
/// Both upgrade to strong under the Hölder condition (saddles in the plane
/// only).
pub fn check_prop2(
    f: &dyn FlowField,
    a: &LocalAction,
    eq: &Equilibrium,
    manifolds: &[Manifold],
    opts: &Prop2Options,
) -> Result<Option<CriteriaVerdict>> {
    let x = &eq.location;
    let mut ev = Evidence {
        eigenvalues: Some(eq.eigenvalues.clone()),
        ..Evidence::default()
    };
    let criterion = match eq.kind {
        EquilibriumKind::Attractor => Criterion::Prop2Attractor,
        EquilibriumKind::Repellor => Criterion::Prop2Repellor,
        EquilibriumKind::Saddle => Criterion::Prop2Saddle,
        EquilibriumKind::Degenerate => {
            ev.note = Some("an eigenvalue has vanishing real part".into());
            return Ok(Some(CriteriaVerdict::new(x, Verdict::NoneApplicable, None, ev)));
        }
    };
    if let LocalAction::Hamiltonian { hamiltonian, .. } = a {
        ev.critical_point = Some(check_holder(hamiltonian.as_ref(), x));
    }
    if criterion == Criterion::Prop2Saddle {
        if f.dim() != 2 {
            ev.note = Some("saddle coverage is checked in two dimensions only; the strong case is open beyond".into());
            return Ok(Some(CriteriaVerdict::new(x, Verdict::NoneApplicable, None, ev)));
        }
        let branches = match trace_invariant_manifolds_2d(f, eq, opts.arc_budget, opts.scale, opts.t_max, &opts.integrator) {
            Ok(b) => b,
            Err(Error::DegenerateSaddle(why)) => {
                ev.note = Some(why);
                return Ok(Some(CriteriaVerdict::new(x, Verdict::NoneApplicable, None, ev)));
            }
            Err(e) => return Err(e),
        };
        let hits: Vec<Option<String>> = branches
            .iter()
            .map(|br| {
                manifolds.iter().find_map(|m| {
                    br.curve
                        .nodes()
                        .windows(2)
                        .any(|w| {
                            let (u, v) = (m.raw_level(&w[0]), m.raw_level(&w[1]));
                            u != 0.0 && (u > 0.0) != (v > 0.0)
                        })
                        .then(|| m.name.clone())
                })
            })
            .collect();
        let covered = hits.iter().all(Option::is_some);
        ev.branch_manifolds = Some(hits);
        if !covered {
            return Ok(None);
        }
    }
    let fit = holder_fit(a, x, opts.scale, opts.holder_radii, opts.directions)?;
    let strong = fit.pass && opts.e_condition;
    ev.holder = Some(fit);
    let verdict = if strong { Verdict::Strong } else { Verdict::Weak };
    Ok(Some(CriteriaVerdict::new(x, verdict, Some(criterion), ev)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyOptions {
    pub directions: usize,
    pub t_max: f64,
    /// Seeds grid for the equilibrium search, points per axis.
    pub equilibrium_seeds: usize,
    pub admissibility_samples: usize,
    pub seed: u64,
    /// Starting points for limit-cycle detection (planar fields only).
    pub cycle_seeds: Vec<Vec<f64>>,
    pub cycle_t_max: f64,
    /// Return-map distance below which a point counts as lying on a cycle.
    pub cycle_band: f64,
    pub prop2: Prop2Options,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            directions: 16,
            t_max: 1e3,
            equilibrium_seeds: 21,
            admissibility_samples: 64,
            seed: 0,
            cycle_seeds: Vec::new(),
            cycle_t_max: 200.0,
            cycle_band: 1e-6,
            prop2: Prop2Options::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleInfo {
    pub point: Vec<f64>,
    pub period: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RejectedManifold {
    pub name: String,
    pub report: Option<AdmissibilityReport>,
    pub reason: String,
}

/// Everything needed to classify points of one scenario. Building it finds
/// the equilibria, checks the manifolds, detects cycles and settles the
/// equilibrium verdicts once.
pub struct Classifier {
    field: SharedField,
    action: LocalAction,
    pub manifolds: Vec<Manifold>,
    pub rejected: Vec<RejectedManifold>,
    pub equilibria: Vec<(Equilibrium, Option<CriteriaVerdict>)>,
    pub cycles: Vec<CycleInfo>,
    opts: ClassifyOptions,
}

impl Classifier {
    pub fn new(
        field: SharedField,
        action: LocalAction,
        manifolds: &[Manifold],
        domain: &BoundingBox,
        opts: ClassifyOptions,
    ) -> Result<Self> {
        let f = field.as_ref();
        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        for m in manifolds {
            match check_admissible(m, f, opts.admissibility_samples, opts.seed) {
                Ok(r) if r.pass => accepted.push(m.clone().oriented(r.orientation)),
                Ok(r) => rejected.push(RejectedManifold {
                    name: m.name.clone(),
                    reason: format!("crossing condition fails (min cosine {:.3e})", r.min_cosine),
                    report: Some(r),
                }),
                Err(Error::EmptyManifold) => rejected.push(RejectedManifold {
                    name: m.name.clone(),
                    report: None,
                    reason: "no zero-set point inside the box".into(),
                }),
                Err(e) => return Err(e),
            }
        }
        let seeds = GridSpec::uniform(&domain.expanded(0.05 * domain.diameter()), opts.equilibrium_seeds);
        let eqs = find_equilibria(f, &domain.expanded(1e-9), &seeds)?;
        let equilibria = eqs
            .into_par_iter()
            .map(|eq| {
                let v = check_prop2(f, &action, &eq, &accepted, &opts.prop2)?;
                Ok((eq, v))
            })
            .collect::<Result<_>>()?;
        let mut cycles: Vec<CycleInfo> = Vec::new();
        for s in &opts.cycle_seeds {
            let seed = Vector::from_column_slice(s);
            let r = detect_limit_cycle(f, &seed, opts.cycle_t_max, &IntegratorOptions::default())?;
            if let (Some(p), Some(t)) = (r.sample_point, r.period) {
                let known = cycles.iter().any(|c| on_cycle(f, &Vector::from_column_slice(&c.point), c.period, &p, 1e-4));
                if !known {
                    cycles.push(CycleInfo {
                        point: p.iter().copied().collect(),
                        period: t,
                    });
                }
            }
        }
        Ok(Self {
            field,
            action,
            manifolds: accepted,
            rejected,
            equilibria,
            cycles,
            opts,
        })
    }

    pub fn field(&self) -> &SharedField {
        &self.field
    }

    pub fn options(&self) -> &ClassifyOptions {
        &self.opts
    }

    /// Whether `x` lies on one of the detected cycles.
    pub fn cycle_at(&self, x: &Vector) -> Option<&CycleInfo> {
        let f = self.field.as_ref();
        self.cycles
            .iter()
            .find(|c| on_cycle(f, &Vector::from_column_slice(&c.point), c.period, x, self.opts.cycle_band))
    }

    pub fn classify_point(&self, x: &Vector) -> Result<CriteriaVerdict> {
        let f = self.field.as_ref();
        if let Some(v) = check_prop0(&self.action, x, self.opts.directions)? {
            return Ok(v);
        }
        if let Some(c) = self.cycle_at(x) {
            let ev = Evidence {
                note: Some(format!("on a limit cycle of period {:.9}", c.period)),
                ..Evidence::default()
            };
            return Ok(if self.action.is_h0_plus() {
                CriteriaVerdict::new(x, Verdict::NonExistence, Some(Criterion::LimitCycleNegative), ev)
            } else {
                CriteriaVerdict::new(x, Verdict::NoneApplicable, None, ev)
            });
        }
        if let Some(v) = check_prop1(f, &self.manifolds, x, self.opts.t_max, &self.opts.prop2.integrator)? {
            return Ok(v);
        }
        let tol = 1e-6 * self.opts.prop2.scale;
        for (eq, v) in &self.equilibria {
            if (&eq.location - x).norm() <= tol {
                if let Some(v) = v {
                    let mut v = v.clone();
                    v.point = x.iter().copied().collect();
                    return Ok(v);
                }
            }
        }
        Ok(CriteriaVerdict::new(x, Verdict::NoneApplicable, None, Evidence::default()))
    }

    /// Classifies every grid point; the order of the output follows the grid.
    pub fn classify_grid(&self, grid: &GridSpec) -> Result<Vec<CriteriaVerdict>> {
        grid.validate()?;
        grid.points().par_iter().map(|x| self.classify_point(x)).collect()
    }
}

/// A point lies on the cycle through `p` when it returns to itself after one
/// period; points off a cycle, and equilibria, do not.
fn on_cycle(f: &dyn FlowField, p: &Vector, period: f64, x: &Vector, band: f64) -> bool {
    let scale = p.norm().max(1.0);
    if f.drift(x).norm() < 1e-8 * scale {
        return false;
    }
    // Cheap rejection: the cycle passes within the distance the flow covers
    // in one period, and that cannot be far from x.
    if (x - p).norm() > 10.0 * scale + period * f.drift(p).norm() {
        return false;
    }
    match flow(f, x, period, &IntegratorOptions::default()) {
        Ok(y) => (y - x).norm() < band * scale,
        Err(_) => false,
    }
}

/// Verdict counts by kind, for summaries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerdictSummary {
    pub strong: usize,
    pub weak: usize,
    pub none_applicable: usize,
    pub non_existence: usize,
}

pub fn summarize(verdicts: &[CriteriaVerdict]) -> VerdictSummary {
    let mut s = VerdictSummary::default();
    for v in verdicts {
        match v.verdict {
            Verdict::Strong => s.strong += 1,
            Verdict::Weak => s.weak += 1,
            Verdict::NoneApplicable => s.none_applicable += 1,
            Verdict::NonExistence => s.non_existence += 1,
        }
    }
    s
}

/// One CSV row per verdict: coordinates, verdict, criterion, margin.
pub fn verdicts_to_csv(verdicts: &[CriteriaVerdict]) -> String {
    let dim = verdicts.first().map_or(0, |v| v.point.len());
    let mut out = String::new();
    let coords: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    out.push_str(&format!("{},verdict,criterion,margin\n", coords.join(",")));
    for v in verdicts {
        let xs: Vec<String> = v.point.iter().map(|c| format!("{c}")).collect();
        let margin = v.evidence.margin.map(|m| format!("{m}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            xs.join(","),
            v.verdict.as_str(),
            v.criterion.map_or("", Criterion::as_str),
            margin
        ));
    }
    out
}

/// Convenience wrapper: shares the field across threads.
pub fn classifier_for<F: FlowField + 'static>(
    field: F,
    action: LocalAction,
    manifolds: &[Manifold],
    domain: &BoundingBox,
    opts: ClassifyOptions,
) -> Result<Classifier> {
    Classifier::new(Arc::new(field), action, manifolds, domain, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{AgmonHamiltonian, SdeHamiltonian};
    use crate::fields::BuiltinField;
    use crate::manifolds::{ManifoldConfig, Potential, Shape};
    use crate::space::vector;

    fn double_well_setup() -> (SharedField, LocalAction, Vec<Manifold>) {
        let field: SharedField = Arc::new(BuiltinField::DoubleWell);
        let a = LocalAction::sde_randers(field.clone());
        let big = BoundingBox::cube(2, 3.0);
        let mk = |shape| ManifoldConfig {
            name: None,
            shape,
            bbox: None,
            orientation: None,
        };
        let ms = vec![
            mk(Shape::Sphere {
                center: vec![-1.0, 0.0],
                radius: 0.2,
            }),
            mk(Shape::Sphere {
                center: vec![1.0, 0.0],
                radius: 0.2,
            }),
            mk(Shape::LevelOfPotential {
                potential: Potential::DoubleWell,
                level: 2.0,
            }),
        ]
        .into_iter()
        .map(|c| c.build(2, &big).unwrap())
        .collect();
        (field, a, ms)
    }

    #[test]
    fn prop0_examples() {
        let r = LocalAction::Riemannian {
            dim: 2,
            metric: Arc::new(|_: &Vector| crate::space::Matrix::identity(2, 2)),
        };
        let v = check_prop0(&r, &vector(&[0.3, 0.1]), 8).unwrap().unwrap();
        assert!((v.evidence.margin.unwrap() - 1.0).abs() < 1e-12);
        let ag = LocalAction::Agmon {
            dim: 2,
            potential: Arc::new(|x: &Vector| x.norm_squared()),
        };
        assert!(check_prop0(&ag, &vector(&[0.5, 0.0]), 8).unwrap().is_some());
        assert!(check_prop0(&ag, &vector(&[0.0, 0.0]), 8).unwrap().is_none());
        let sde = LocalAction::sde_randers(Arc::new(BuiltinField::DoubleWell));
        assert!(check_prop0(&sde, &vector(&[0.5, 0.3]), 16).unwrap().is_none());
        assert!(matches!(check_prop0(&sde, &vector(&[0.5, 0.3]), 4), Err(Error::Config(_))));
    }

    #[test]
    fn holder_equivalence() {
        let f: SharedField = Arc::new(BuiltinField::DoubleWell);
        let h = SdeHamiltonian::new(f);
        assert!(check_holder(&h, &vector(&[1.0, 0.0])));
        assert!(!check_holder(&h, &vector(&[0.5, 0.0])));
        let ag = AgmonHamiltonian {
            dim: 2,
            potential: Arc::new(|x: &Vector| x.norm_squared()),
        };
        assert!(check_holder(&ag, &vector(&[0.0, 0.0])));
    }

    #[test]
    fn prop1_basin_point_and_saddle() {
        let (field, _, ms) = double_well_setup();
        let ms: Vec<Manifold> = ms
            .into_iter()
            .map(|m| {
                let r = check_admissible(&m, field.as_ref(), 32, 0).unwrap();
                assert!(r.pass, "{} {r:?}", m.name);
                m.oriented(r.orientation)
            })
            .collect();
        let opts = IntegratorOptions::default();
        let v = check_prop1(field.as_ref(), &ms, &vector(&[0.5, 0.2]), 1e3, &opts).unwrap().unwrap();
        assert_eq!(v.verdict, Verdict::Strong);
        assert!(v.evidence.crossing_residual.unwrap() < 1e-8);
        assert!(check_prop1(field.as_ref(), &ms, &vector(&[0.0, 0.0]), 1e3, &opts).unwrap().is_none());
    }

    #[test]
    fn prop2_double_well() {
        let (field, a, ms) = double_well_setup();
        let ms: Vec<Manifold> = ms
            .into_iter()
            .map(|m| {
                let r = check_admissible(&m, field.as_ref(), 32, 0).unwrap();
                m.oriented(r.orientation)
            })
            .collect();
        let opts = Prop2Options::default();
        let att = Equilibrium::classify(field.as_ref(), vector(&[-1.0, 0.0]));
        let v = check_prop2(field.as_ref(), &a, &att, &ms, &opts).unwrap().unwrap();
        assert_eq!((v.verdict, v.criterion), (Verdict::Strong, Some(Criterion::Prop2Attractor)));
        assert!((v.evidence.holder.as_ref().unwrap().slope - 1.0).abs() < 0.05);
        let saddle = Equilibrium::classify(field.as_ref(), vector(&[0.0, 0.0]));
        let v = check_prop2(field.as_ref(), &a, &saddle, &ms, &opts).unwrap().unwrap();
        assert_eq!((v.verdict, v.criterion), (Verdict::Strong, Some(Criterion::Prop2Saddle)));
        assert!(check_prop2(field.as_ref(), &a, &saddle, &[], &opts).unwrap().is_none());
    }

    #[test]
    fn riemannian_grid_is_all_prop0() {
        let field = BuiltinField::DoubleWell;
        let a = LocalAction::Riemannian {
            dim: 2,
            metric: Arc::new(|_: &Vector| crate::space::Matrix::identity(2, 2)),
        };
        let bbox = BoundingBox::cube(2, 1.0);
        let c = classifier_for(field, a, &[], &bbox, ClassifyOptions::default()).unwrap();
        let vs = c.classify_grid(&GridSpec::uniform(&bbox, 5)).unwrap();
        assert!(vs.iter().all(|v| v.criterion == Some(Criterion::Prop0)));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let v = CriteriaVerdict::new(&vector(&[0.5, 1.0]), Verdict::Weak, Some(Criterion::Prop2Saddle), Evidence::default());
        let csv = verdicts_to_csv(&[v]);
        assert_eq!(csv, "x1,x2,verdict,criterion,margin\n0.5,1,weak,prop2-saddle,\n");
    }
}
