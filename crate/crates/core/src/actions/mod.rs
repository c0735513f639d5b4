//! Local actions `ℓ(x, y)`: nonnegative, convex and positively 1-homogeneous
//! in the direction `y`.
//!
//! Four variants have closed forms; the fifth is induced by a Hamiltonian
//! through the root system solved in [`solve`].

pub mod hamiltonian;
pub mod solve;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{FlowField, SharedField};
use crate::space::{jacobian_fd, Matrix, Vector};

pub use hamiltonian::{
    AgmonHamiltonian, Hamiltonian, KurtzDrift, MarkovJumpHamiltonian, MatrixFn, Rate, RiemannianHamiltonian, ScalarFn,
    SdeHamiltonian, SharedHamiltonian,
};
pub use solve::{
    check_hamiltonian, critical_margin, drift_constant, hamiltonian_local_action, is_critical_point, legendre_lagrangian,
    solve_theta, HamiltonianReport, ThetaSolution, TOL_CRIT, TOL_ROOT,
};

/// `|u||v| − ⟨u, v⟩` without cancellation when `u` and `v` are nearly
/// parallel (uses Lagrange's identity for the squared sine part).
pub fn alignment_gap(u: &Vector, v: &Vector) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    let dot = u.dot(v);
    if dot <= 0.0 {
        return nu * nv - dot;
    }
    let mut wedge = 0.0;
    for i in 0..u.len() {
        for j in (i + 1)..u.len() {
            let w = u[i] * v[j] - u[j] * v[i];
            wedge += w * w;
        }
    }
    wedge / (nu * nv + dot)
}

#[derive(Clone)]
pub enum LocalAction {
    /// `|b||y| − ⟨b, y⟩`.
    SdeRanders { drift: SharedField },
    /// `|b|_{A⁻¹}|y|_{A⁻¹} − ⟨b, y⟩_{A⁻¹}`.
    SdeGeneral { drift: SharedField, diffusion: MatrixFn },
    /// `√(yᵀA(x)y)`.
    Riemannian { dim: usize, metric: MatrixFn },
    /// `√(2U(x))|y|`.
    Agmon { dim: usize, potential: ScalarFn },
    /// `⟨y, θ̂(x, y)⟩` for a general Hamiltonian. `strict` records that
    /// `H(x, 0) = 0` everywhere, so that flowlines of `drift` cost nothing.
    Hamiltonian {
        hamiltonian: SharedHamiltonian,
        drift: Option<SharedField>,
        strict: bool,
    },
}

impl std::fmt::Debug for LocalAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalAction")
            .field("variant", &self.variant())
            .field("dim", &self.dim())
            .finish()
    }
}

fn cholesky_of(a: Matrix, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Metric(format!("{what} is not finite")));
    }
    let asym = (&a - a.transpose()).norm();
    if asym > 1e-10 * (1.0 + a.norm()) {
        return Err(Error::Metric(format!("{what} is not symmetric")));
    }
    a.cholesky().ok_or_else(|| Error::Metric(format!("{what} is not positive definite")))
}

impl LocalAction {
    pub fn sde_randers(drift: SharedField) -> Self {
        Self::SdeRanders { drift }
    }

    /// Hamiltonian action with the natural drift `H_θ(x, 0)`.
    pub fn from_hamiltonian(h: SharedHamiltonian, strict: bool) -> Self {
        let drift: SharedField = Arc::new(NaturalDrift { hamiltonian: h.clone() });
        Self::Hamiltonian {
            hamiltonian: h,
            drift: Some(drift),
            strict,
        }
    }

    pub fn variant(&self) -> &'static str {
        match self {
            Self::SdeRanders { .. } => "sde_randers",
            Self::SdeGeneral { .. } => "sde_general",
            Self::Riemannian { .. } => "riemannian",
            Self::Agmon { .. } => "agmon",
            Self::Hamiltonian { .. } => "hamiltonian",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::SdeRanders { drift } | Self::SdeGeneral { drift, .. } => drift.dim(),
            Self::Riemannian { dim, .. } | Self::Agmon { dim, .. } => *dim,
            Self::Hamiltonian { hamiltonian, .. } => hamiltonian.dim(),
        }
    }

    /// The drift along which the action can vanish, when there is one.
    pub fn drift(&self) -> Option<SharedField> {
        match self {
            Self::SdeRanders { drift } | Self::SdeGeneral { drift, .. } => Some(drift.clone()),
            Self::Riemannian { dim, .. } | Self::Agmon { dim, .. } => Some(Arc::new(ZeroField(*dim))),
            Self::Hamiltonian { drift, .. } => drift.clone(),
        }
    }

    /// A Hamiltonian inducing this action.
    pub fn hamiltonian(&self) -> SharedHamiltonian {
        match self {
            Self::SdeRanders { drift } => Arc::new(SdeHamiltonian::new(drift.clone())),
            Self::SdeGeneral { drift, diffusion } => Arc::new(SdeHamiltonian::with_diffusion(drift.clone(), diffusion.clone())),
            Self::Riemannian { dim, metric } => Arc::new(RiemannianHamiltonian {
                dim: *dim,
                metric: metric.clone(),
            }),
            Self::Agmon { dim, potential } => Arc::new(AgmonHamiltonian {
                dim: *dim,
                potential: potential.clone(),
            }),
            Self::Hamiltonian { hamiltonian, .. } => hamiltonian.clone(),
        }
    }

    /// Whether `H(x, 0) = 0` holds identically, so that the drift's
    /// flowlines are free and limit cycles rule out minimizers.
    pub fn is_h0_plus(&self) -> bool {
        match self {
            Self::SdeRanders { .. } | Self::SdeGeneral { .. } => true,
            Self::Riemannian { .. } | Self::Agmon { .. } => false,
            Self::Hamiltonian { strict, .. } => *strict,
        }
    }

    pub fn eval(&self, x: &Vector, y: &Vector) -> Result<f64> {
        match self {
            Self::SdeRanders { drift } => Ok(alignment_gap(&drift.drift(x), y)),
            Self::SdeGeneral { drift, diffusion } => {
                let ch = cholesky_of(diffusion(x), "diffusion matrix")?;
                let l = ch.l();
                let (Some(u), Some(v)) = (l.solve_lower_triangular(&drift.drift(x)), l.solve_lower_triangular(y)) else {
                    return Err(Error::Metric("diffusion matrix is singular".into()));
                };
                Ok(alignment_gap(&u, &v))
            }
            Self::Riemannian { metric, .. } => {
                let a = metric(x);
                let ch = cholesky_of(a, "metric")?;
                Ok((ch.l().transpose() * y).norm())
            }
            Self::Agmon { potential, .. } => {
                let u = potential(x);
                if u < 0.0 || !u.is_finite() {
                    return Err(Error::Domain(format!("potential is {u} < 0")));
                }
                Ok((2.0 * u).sqrt() * y.norm())
            }
            Self::Hamiltonian { hamiltonian, .. } => hamiltonian_local_action(hamiltonian.as_ref(), x, y),
        }
    }
}

/// `b(x) = H_θ(x, 0)`.
#[derive(Clone)]
pub struct NaturalDrift {
    pub hamiltonian: SharedHamiltonian,
}

impl FlowField for NaturalDrift {
    fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }
    fn drift(&self, x: &Vector) -> Vector {
        self.hamiltonian.gradient(x, &Vector::zeros(x.len()))
    }
    fn jacobian(&self, x: &Vector) -> Matrix {
        jacobian_fd(|z| self.drift(z), x, crate::fields::JACOBIAN_STEP)
    }
}

pub fn natural_drift(h: SharedHamiltonian) -> NaturalDrift {
    NaturalDrift { hamiltonian: h }
}

#[derive(Clone, Copy, Debug)]
struct ZeroField(usize);

impl FlowField for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }
    fn drift(&self, x: &Vector) -> Vector {
        Vector::zeros(x.len())
    }
    fn jacobian(&self, _x: &Vector) -> Matrix {
        Matrix::zeros(self.0, self.0)
    }
}
