//! Root system behind Hamiltonian actions and related quantities.
//!
//! For `y ≠ 0` the local action is `ℓ(x, y) = ⟨y, θ̂⟩` where `(θ̂, λ)` solves
//! `H_θ(x, θ) = λy`, `H(x, θ) = 0`, `λ ≥ 0`. The solver eliminates `θ`: for
//! fixed `λ` the first equation is the optimality condition of the strictly
//! convex problem `min_θ H(x, θ) − λ⟨ŷ, θ⟩`, and along its minimizer `θ(λ)`
//! the map `λ ↦ H(x, θ(λ))` is increasing. A bracketed scalar root search
//! on that map is followed by a full Newton polish of the joint system.

use serde::Serialize;

use super::hamiltonian::Hamiltonian;
use crate::error::{Error, Result};
use crate::space::{unit_directions, BoundingBox, GridSpec, Matrix, Vector};

pub const TOL_ROOT: f64 = 1e-12;
pub const TOL_CRIT: f64 = 1e-9;
/// Below this value of `min_θ H(x, θ)` the point is treated as critical.
const CRITICAL_DEPTH: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaSolution {
    #[serde(serialize_with = "crate::space::ser_vec")]
    pub theta_hat: Vector,
    pub lambda: f64,
    pub residual: f64,
}

/// Solves `(H + μI) d = −g`, adding a shift when `H` is not numerically
/// positive definite.
fn newton_direction(hess: &Matrix, grad: &Vector) -> Option<Vector> {
    let n = hess.nrows();
    let mut shift = 0.0;
    for _ in 0..30 {
        let m = if shift > 0.0 { hess + Matrix::identity(n, n) * shift } else { hess.clone() };
        if let Some(ch) = m.cholesky() {
            let d = ch.solve(&(-grad));
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        shift = if shift == 0.0 { 1e-10 * (1.0 + hess.norm()) } else { shift * 10.0 };
    }
    None
}

/// Minimizes `H(x, θ) − ⟨v, θ⟩` by damped Newton from `start`.
fn minimize_tilted(h: &dyn Hamiltonian, x: &Vector, v: &Vector, start: &Vector) -> Option<Vector> {
    let psi = |t: &Vector| h.value(x, t) - v.dot(t);
    let mut theta = start.clone();
    let mut value = psi(&theta);
    if !value.is_finite() {
        theta = Vector::zeros(start.len());
        value = psi(&theta);
    }
    for _ in 0..200 {
        let grad = h.gradient(x, &theta) - v;
        let gnorm = grad.norm();
        if gnorm <= 1e-15 * (1.0 + v.norm()) {
            return Some(theta);
        }
        let hess = h.hessian(x, &theta);
        let d = newton_direction(&hess, &grad)?;
        let slope = grad.dot(&d);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &theta + &d * t;
            let tv = psi(&trial);
            if tv.is_finite() && tv <= value + 1e-4 * t * slope {
                theta = trial;
                value = tv;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Newton has stalled at rounding level; accept if the gradient is
            // already tiny compared with the curvature scale.
            return (gnorm <= 1e-10 * (1.0 + v.norm())).then_some(theta);
        }
        if (&d * t).norm() <= 1e-16 * (1.0 + theta.norm()) {
            return Some(theta);
        }
    }
    let g = (h.gradient(x, &theta) - v).norm();
    (g <= 1e-10 * (1.0 + v.norm())).then_some(theta)
}

fn joint_residual(h: &dyn Hamiltonian, x: &Vector, u: &Vector, theta: &Vector, lambda: f64) -> f64 {
    let r1 = (h.gradient(x, theta) - u * lambda).norm();
    r1.max(h.value(x, theta).abs())
}

/// Newton on `[H_θ − λu; H] = 0` in `(θ, λ)`, keeping the best iterate.
fn polish(h: &dyn Hamiltonian, x: &Vector, u: &Vector, theta: Vector, lambda: f64) -> (Vector, f64, f64) {
    let n = theta.len();
    let mut best = (theta.clone(), lambda, joint_residual(h, x, u, &theta, lambda));
    let (mut th, mut la) = (theta, lambda);
    for _ in 0..12 {
        if best.2 < 1e-15 {
            break;
        }
        let g = h.gradient(x, &th);
        let mut jac = Matrix::zeros(n + 1, n + 1);
        jac.view_mut((0, 0), (n, n)).copy_from(&h.hessian(x, &th));
        for i in 0..n {
            jac[(i, n)] = -u[i];
            jac[(n, i)] = g[i];
        }
        let mut rhs = Vector::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(&g - u * la));
        rhs[n] = h.value(x, &th);
        let Some(step) = jac.lu().solve(&(-rhs)) else { break };
        th += step.rows(0, n);
        la += step[n];
        let r = joint_residual(h, x, u, &th, la);
        if !r.is_finite() {
            break;
        }
        if r < best.2 && la >= 0.0 {
            best = (th.clone(), la, r);
        } else if r >= best.2 {
            break;
        }
    }
    best
}

/// Scalar root of `φ(λ) = H(x, θ(λ))` with `θ(λ)` the tilted minimizer.
fn bracketed_lambda(h: &dyn Hamiltonian, x: &Vector, u: &Vector, theta0: &Vector) -> Option<(Vector, f64)> {
    let eval = |lambda: f64, start: &Vector| -> Option<(Vector, f64)> {
        let th = minimize_tilted(h, x, &(u * lambda), start)?;
        let phi = h.value(x, &th);
        phi.is_finite().then_some((th, phi))
    };
    let (mut lo, mut th_lo) = (0.0, theta0.clone());
    let mut hi = 1.0;
    let (mut th_hi, mut phi_hi) = eval(hi, theta0)?;
    let mut expansions = 0;
    while phi_hi < 0.0 {
        lo = hi;
        th_lo = th_hi.clone();
        hi *= 2.0;
        let (t, p) = eval(hi, &th_hi)?;
        th_hi = t;
        phi_hi = p;
        expansions += 1;
        if expansions > 200 {
            return None;
        }
    }
    // Safeguarded Newton with φ'(λ) = λ ŷᵀ H_θθ⁻¹ ŷ.
    let mut lambda = 0.5 * (lo + hi);
    let mut theta = th_lo.clone();
    for _ in 0..200 {
        let (th, phi) = eval(lambda, &theta)?;
        theta = th;
        if phi.abs() <= 1e-15 * (1.0 + lambda) {
            return Some((theta, lambda));
        }
        if phi < 0.0 {
            lo = lambda;
            th_lo = theta.clone();
        } else {
            hi = lambda;
        }
        let hess = h.hessian(x, &theta);
        let dphi = hess.cholesky().map(|c| lambda * u.dot(&c.solve(u)));
        let mut next = match dphi {
            Some(d) if d > 0.0 && d.is_finite() => lambda - phi / d,
            _ => f64::NAN,
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) <= 1e-15 * hi {
            return Some((theta, lambda));
        }
        lambda = next;
        if phi > 0.0 {
            theta = th_lo.clone();
        }
    }
    Some((theta, lambda))
}

/// Fallback: joint Newton from seeded random momenta in the ball that must
/// contain the solution.
fn restarts(h: &dyn Hamiltonian, x: &Vector, u: &Vector) -> Option<(Vector, f64, f64)> {
    let n = u.len();
    let zero = Vector::zeros(n);
    let g0 = h.gradient(x, &zero).norm();
    let h0 = h.value(x, &zero).abs();
    let m = h.hessian(x, &zero).symmetric_eigenvalues().min().max(1e-12);
    let radius = (g0 + (g0 * g0 + 2.0 * m * h0).sqrt()) / m;
    let mut rng = crate::rng(0x5eed_7e7a);
    let mut best: Option<(Vector, f64, f64)> = None;
    for k in 0..8 {
        let dir = crate::space::random_unit(n, &mut rng);
        let r: f64 = rand::Rng::random::<f64>(&mut rng) * radius;
        let start = if k == 0 { u * radius } else { dir * r };
        let lambda0 = h.gradient(x, &start).dot(u).max(0.0);
        let cand = polish(h, x, u, start, lambda0);
        if cand.1 >= 0.0 && best.as_ref().is_none_or(|b| cand.2 < b.2) {
            best = Some(cand);
        }
        if best.as_ref().is_some_and(|b| b.2 < TOL_ROOT) {
            break;
        }
    }
    best
}

/// Solves the root system for `(θ̂, λ)`. At critical points returns
/// `θ̂ = argmin H(x, ·)` (which is 0 there) and `λ = 0`.
pub fn solve_theta(h: &dyn Hamiltonian, x: &Vector, y: &Vector) -> Result<ThetaSolution> {
    let ny = y.norm();
    if !(ny > 0.0) || !ny.is_finite() {
        return Err(Error::Precondition("solve_theta needs a finite nonzero direction".into()));
    }
    let u = y / ny;
    let n = y.len();
    let zero = Vector::zeros(n);
    let theta0 = minimize_tilted(h, x, &zero, &zero);
    if let Some(t0) = &theta0 {
        let depth = h.value(x, t0);
        if depth >= -CRITICAL_DEPTH {
            return Ok(ThetaSolution {
                theta_hat: t0.clone(),
                lambda: 0.0,
                residual: depth.abs(),
            });
        }
    }
    let mut best: Option<(Vector, f64, f64)> = None;
    if let Some(t0) = &theta0 {
        if let Some((th, la)) = bracketed_lambda(h, x, &u, t0) {
            best = Some(polish(h, x, &u, th, la));
        }
    }
    if best.as_ref().is_none_or(|b| b.2 >= TOL_ROOT) {
        if let Some(cand) = restarts(h, x, &u) {
            if best.as_ref().is_none_or(|b| cand.2 < b.2) {
                best = Some(cand);
            }
        }
    }
    match best {
        Some((theta_hat, lambda, residual)) if residual < TOL_ROOT && lambda >= 0.0 => Ok(ThetaSolution {
            theta_hat,
            lambda: lambda / ny,
            residual,
        }),
        Some((_, _, residual)) => Err(Error::SolverFailure {
            what: "solve_theta".into(),
            residual,
        }),
        None => Err(Error::SolverFailure {
            what: "solve_theta".into(),
            residual: f64::INFINITY,
        }),
    }
}

/// `ℓ(x, y) = ⟨y, θ̂(x, y)⟩`, with `ℓ(x, 0) = 0`.
pub fn hamiltonian_local_action(h: &dyn Hamiltonian, x: &Vector, y: &Vector) -> Result<f64> {
    let ny = y.norm();
    if ny == 0.0 {
        return Ok(0.0);
    }
    let sol = solve_theta(h, x, y)?;
    Ok(ny * (y / ny).dot(&sol.theta_hat))
}

/// Legendre transform `L(x, y) = sup_θ ⟨y, θ⟩ − H(x, θ)`.
pub fn legendre_lagrangian(h: &dyn Hamiltonian, x: &Vector, y: &Vector) -> Result<f64> {
    let theta = minimize_tilted(h, x, y, &Vector::zeros(y.len())).ok_or_else(|| Error::SolverFailure {
        what: "legendre_lagrangian".into(),
        residual: f64::INFINITY,
    })?;
    Ok(y.dot(&theta) - h.value(x, &theta))
}

pub fn critical_margin(h: &dyn Hamiltonian, x: &Vector) -> f64 {
    let zero = Vector::zeros(x.len());
    h.value(x, &zero).abs().max(h.gradient(x, &zero).norm())
}

pub fn is_critical_point(h: &dyn Hamiltonian, x: &Vector) -> bool {
    critical_margin(h, x) < TOL_CRIT
}

fn spectral_norm(m: &Matrix) -> f64 {
    m.clone().symmetric_eigenvalues().iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// The constant `𝒜 = 1/(2 + sup ‖H_θθ‖)` with the supremum sampled over the
/// grid points times momenta `|θ| ≤ a`, `a = sup |b|`. Always in `(0, ½]`.
pub fn drift_constant(h: &dyn Hamiltonian, k: &BoundingBox, samples: &GridSpec) -> Result<f64> {
    samples.validate()?;
    if samples.lo.len() != h.dim() || k.dim() != h.dim() {
        return Err(Error::Config("drift_constant sample grid has the wrong dimension".into()));
    }
    let points: Vec<Vector> = samples.points().into_iter().filter(|p| k.contains(p)).collect();
    if points.is_empty() {
        return Err(Error::Config("drift_constant needs at least one sample inside K".into()));
    }
    let n = h.dim();
    let zero = Vector::zeros(n);
    let a = points.iter().map(|x| h.gradient(x, &zero).norm()).fold(0.0, f64::max);
    let dirs = unit_directions(n, 16, 0xd1f7);
    let mut sup: f64 = 0.0;
    for x in &points {
        sup = sup.max(spectral_norm(&h.hessian(x, &zero)));
        for d in &dirs {
            for frac in [0.5, 1.0] {
                sup = sup.max(spectral_norm(&h.hessian(x, &(d * (a * frac)))));
            }
        }
    }
    if !sup.is_finite() {
        return Err(Error::Config("Hessian is not finite on K".into()));
    }
    Ok(1.0 / (2.0 + sup))
}

/// Sampled conditions on a Hamiltonian over a grid.
#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianReport {
    /// `max H(x, 0)`; nonpositive when the first condition holds.
    pub max_h_at_zero: f64,
    /// `max |H(x, 0)|`, zero for the strict variant.
    pub max_abs_h_at_zero: f64,
    pub h1: bool,
    pub h1_strict: bool,
    /// Smallest sampled curvature `⟨ξ, H_θθ ξ⟩/|ξ|²`.
    pub min_curvature: f64,
    /// Largest deviation of `H_θ` from central differences of `H`.
    pub gradient_error: f64,
    pub tolerance: f64,
}

pub fn check_hamiltonian(h: &dyn Hamiltonian, samples: &GridSpec, theta_radius: f64, tol: f64) -> Result<HamiltonianReport> {
    samples.validate()?;
    let n = h.dim();
    let zero = Vector::zeros(n);
    let dirs = unit_directions(n, 8, 0xc4ec);
    let mut max_h: f64 = f64::NEG_INFINITY;
    let mut max_abs: f64 = 0.0;
    let mut min_curv = f64::INFINITY;
    let mut grad_err: f64 = 0.0;
    for x in samples.points() {
        let h0 = h.value(&x, &zero);
        max_h = max_h.max(h0);
        max_abs = max_abs.max(h0.abs());
        for d in std::iter::once(zero.clone()).chain(dirs.iter().map(|d| d * theta_radius)) {
            let hess = h.hessian(&x, &d);
            min_curv = min_curv.min(hess.clone().symmetric_eigenvalues().min());
            let fd = crate::space::gradient_fd(|t| h.value(&x, t), &d, 1e-5);
            let g = h.gradient(&x, &d);
            grad_err = grad_err.max((g - fd).norm());
        }
    }
    Ok(HamiltonianReport {
        max_h_at_zero: max_h,
        max_abs_h_at_zero: max_abs,
        h1: max_h <= tol,
        h1_strict: max_abs <= tol,
        min_curvature: min_curv,
        gradient_error: grad_err,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::hamiltonian::{MarkovJumpHamiltonian, RiemannianHamiltonian, SdeHamiltonian};
    use crate::fields::BuiltinField;
    use crate::space::vector;
    use std::sync::Arc;

    fn constant_sde(b: &[f64]) -> SdeHamiltonian {
        SdeHamiltonian::new(Arc::new(BuiltinField::Constant { b: b.to_vec() }))
    }

    #[test]
    fn sde_orthogonal_direction() {
        let h = constant_sde(&[1.0, 0.0]);
        let s = solve_theta(&h, &vector(&[0.0, 0.0]), &vector(&[0.0, 1.0])).unwrap();
        assert!((s.lambda - 1.0).abs() < 1e-12);
        assert!((s.theta_hat - vector(&[-1.0, 1.0])).norm() < 1e-12);
        assert!(s.residual < TOL_ROOT);
        let l = hamiltonian_local_action(&h, &vector(&[0.0, 0.0]), &vector(&[0.0, 1.0])).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn critical_point_returns_zero() {
        let h = SdeHamiltonian::new(Arc::new(BuiltinField::DoubleWell));
        let s = solve_theta(&h, &vector(&[1.0, 0.0]), &vector(&[0.3, 0.4])).unwrap();
        assert_eq!(s.lambda, 0.0);
        assert_eq!(s.theta_hat, vector(&[0.0, 0.0]));
        assert!(is_critical_point(&h, &vector(&[1.0, 0.0])));
        assert!(!is_critical_point(&constant_sde(&[1.0, 0.0]), &vector(&[0.0, 0.0])));
    }

    #[test]
    fn birth_death_root() {
        let h = MarkovJumpHamiltonian::birth_death(1.0, 1.0);
        let s = solve_theta(&h, &vector(&[2.0]), &vector(&[1.0])).unwrap();
        assert!((s.theta_hat[0] - 2f64.ln()).abs() < 1e-12);
        assert!((s.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flow_direction_has_zero_cost() {
        let h = constant_sde(&[0.6, -0.8]);
        let x = vector(&[0.0, 0.0]);
        let y = h.gradient(&x, &vector(&[0.0, 0.0])) * 2.5;
        assert!(hamiltonian_local_action(&h, &x, &y).unwrap().abs() < 1e-10);
        assert_eq!(hamiltonian_local_action(&h, &x, &vector(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn riemannian_is_never_critical() {
        let h = RiemannianHamiltonian {
            dim: 2,
            metric: Arc::new(|_: &Vector| Matrix::identity(2, 2)),
        };
        assert!(!is_critical_point(&h, &vector(&[0.3, 0.1])));
        let l = hamiltonian_local_action(&h, &vector(&[0.0, 0.0]), &vector(&[3.0, 4.0])).unwrap();
        assert!((l - 5.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_pairs() {
        let h = constant_sde(&[1.0, 0.0]);
        let x = vector(&[0.0, 0.0]);
        assert!((legendre_lagrangian(&h, &x, &vector(&[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
        assert!(legendre_lagrangian(&h, &x, &vector(&[1.0, 0.0])).unwrap().abs() < 1e-14);
        let bd = MarkovJumpHamiltonian::birth_death(1.0, 1.0);
        assert!(legendre_lagrangian(&bd, &vector(&[1.0]), &vector(&[0.0])).unwrap().abs() < 1e-14);
    }

    #[test]
    fn drift_constant_of_identity_diffusion() {
        let h = SdeHamiltonian::new(Arc::new(BuiltinField::DoubleWell));
        let k = BoundingBox::cube(2, 1.5);
        let a = drift_constant(&h, &k, &GridSpec::uniform(&k, 5)).unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15);
    }
}
