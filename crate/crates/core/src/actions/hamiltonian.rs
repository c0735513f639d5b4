//! Hamiltonians `H(x, θ)` convex in the momentum `θ`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fields::{FlowField, SharedField};
use crate::space::{Matrix, Vector};

pub type MatrixFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;

pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector, theta: &Vector) -> f64;

    /// `H_θ(x, θ)`.
    fn gradient(&self, x: &Vector, theta: &Vector) -> Vector;

    /// `H_θθ(x, θ)`, symmetric.
    fn hessian(&self, x: &Vector, theta: &Vector) -> Matrix;

    /// Optional analytic `H_x(x, θ)`.
    fn x_gradient(&self, _x: &Vector, _theta: &Vector) -> Option<Vector> {
        None
    }

    fn name(&self) -> &'static str;
}

pub type SharedHamiltonian = Arc<dyn Hamiltonian>;

/// `H = ⟨b, θ⟩ + ½ θᵀAθ` for the diffusion `dX = b dt + √ε σ dW`, `A = σσᵀ`.
#[derive(Clone)]
pub struct SdeHamiltonian {
    pub drift: SharedField,
    /// `None` means `A = I`.
    pub diffusion: Option<MatrixFn>,
}

impl SdeHamiltonian {
    pub fn new(drift: SharedField) -> Self {
        Self { drift, diffusion: None }
    }

    pub fn with_diffusion(drift: SharedField, diffusion: MatrixFn) -> Self {
        Self {
            drift,
            diffusion: Some(diffusion),
        }
    }

    fn a(&self, x: &Vector) -> Matrix {
        match &self.diffusion {
            Some(a) => a(x),
            None => Matrix::identity(x.len(), x.len()),
        }
    }
}

impl Hamiltonian for SdeHamiltonian {
    fn dim(&self) -> usize {
        self.drift.dim()
    }
    fn value(&self, x: &Vector, theta: &Vector) -> f64 {
        let b = self.drift.drift(x);
        b.dot(theta) + 0.5 * theta.dot(&(self.a(x) * theta))
    }
    fn gradient(&self, x: &Vector, theta: &Vector) -> Vector {
        self.drift.drift(x) + self.a(x) * theta
    }
    fn hessian(&self, x: &Vector, _theta: &Vector) -> Matrix {
        self.a(x)
    }
    fn name(&self) -> &'static str {
        "sde"
    }
}

/// Jump intensity `ν(x)` from the built-in rate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rate {
    Constant { value: f64 },
    /// `coef · x[component]`.
    Linear { coef: f64, component: usize },
    /// `constant + ⟨coefs, x⟩`.
    Affine { constant: f64, coefs: Vec<f64> },
    /// Mass action `coef · Π x_k^{powers[k]}`.
    MassAction { coef: f64, powers: Vec<u32> },
}

impl Rate {
    pub fn eval(&self, x: &Vector) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Linear { coef, component } => coef * x[*component],
            Self::Affine { constant, coefs } => constant + coefs.iter().zip(x.iter()).map(|(c, v)| c * v).sum::<f64>(),
            Self::MassAction { coef, powers } => powers.iter().zip(x.iter()).fold(*coef, |acc, (&p, &v)| acc * v.powi(p as i32)),
        }
    }

    pub fn max_component(&self) -> Option<usize> {
        match self {
            Self::Constant { .. } => None,
            Self::Linear { component, .. } => Some(*component),
            Self::Affine { coefs, .. } => coefs.len().checked_sub(1),
            Self::MassAction { powers, .. } => powers.len().checked_sub(1),
        }
    }
}

/// `H = Σ νᵢ(x)(e^{⟨eᵢ,θ⟩} − 1)` for a jump process with jump vectors `eᵢ`.
#[derive(Clone, Debug)]
pub struct MarkovJumpHamiltonian {
    pub jumps: Vec<Vector>,
    pub rates: Vec<Rate>,
}

impl MarkovJumpHamiltonian {
    pub fn new(jumps: Vec<Vector>, rates: Vec<Rate>) -> Self {
        Self { jumps, rates }
    }

    /// Birth at rate `birth`, death at rate `death·x`.
    pub fn birth_death(birth: f64, death: f64) -> Self {
        Self::new(
            vec![Vector::from_vec(vec![1.0]), Vector::from_vec(vec![-1.0])],
            vec![Rate::Constant { value: birth }, Rate::Linear { coef: death, component: 0 }],
        )
    }

    /// The zero-noise-limit drift `Σ νᵢ(x) eᵢ`.
    pub fn kurtz_drift(&self) -> KurtzDrift {
        KurtzDrift { model: self.clone() }
    }
}

impl Hamiltonian for MarkovJumpHamiltonian {
    fn dim(&self) -> usize {
        self.jumps.first().map_or(0, |e| e.len())
    }
    fn value(&self, x: &Vector, theta: &Vector) -> f64 {
        self.jumps
            .iter()
            .zip(&self.rates)
            .map(|(e, r)| r.eval(x) * e.dot(theta).exp_m1())
            .sum()
    }
    fn gradient(&self, x: &Vector, theta: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim());
        for (e, r) in self.jumps.iter().zip(&self.rates) {
            g.axpy(r.eval(x) * e.dot(theta).exp(), e, 1.0);
        }
        g
    }
    fn hessian(&self, x: &Vector, theta: &Vector) -> Matrix {
        let n = self.dim();
        let mut h = Matrix::zeros(n, n);
        for (e, r) in self.jumps.iter().zip(&self.rates) {
            h += e * e.transpose() * (r.eval(x) * e.dot(theta).exp());
        }
        h
    }
    fn name(&self) -> &'static str {
        "markov_jump"
    }
}

#[derive(Clone, Debug)]
pub struct KurtzDrift {
    model: MarkovJumpHamiltonian,
}

impl FlowField for KurtzDrift {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn drift(&self, x: &Vector) -> Vector {
        let mut b = Vector::zeros(self.dim());
        for (e, r) in self.model.jumps.iter().zip(&self.model.rates) {
            b.axpy(r.eval(x), e, 1.0);
        }
        b
    }
}

/// `H = θᵀA(x)⁻¹θ − 1`; its action is the Riemannian length `√(yᵀAy)`.
#[derive(Clone)]
pub struct RiemannianHamiltonian {
    pub dim: usize,
    pub metric: MatrixFn,
}

impl RiemannianHamiltonian {
    fn inverse(&self, x: &Vector) -> Matrix {
        let a = (self.metric)(x);
        a.clone().try_inverse().unwrap_or_else(|| Matrix::from_element(a.nrows(), a.ncols(), f64::NAN))
    }
}

impl Hamiltonian for RiemannianHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector, theta: &Vector) -> f64 {
        theta.dot(&(self.inverse(x) * theta)) - 1.0
    }
    fn gradient(&self, x: &Vector, theta: &Vector) -> Vector {
        self.inverse(x) * theta * 2.0
    }
    fn hessian(&self, x: &Vector, _theta: &Vector) -> Matrix {
        self.inverse(x) * 2.0
    }
    fn name(&self) -> &'static str {
        "riemannian"
    }
}

/// `H = ½|θ|² − U(x)`; its action is `√(2U)|y|`.
#[derive(Clone)]
pub struct AgmonHamiltonian {
    pub dim: usize,
    pub potential: ScalarFn,
}

impl Hamiltonian for AgmonHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector, theta: &Vector) -> f64 {
        0.5 * theta.norm_squared() - (self.potential)(x)
    }
    fn gradient(&self, _x: &Vector, theta: &Vector) -> Vector {
        theta.clone()
    }
    fn hessian(&self, _x: &Vector, theta: &Vector) -> Matrix {
        Matrix::identity(theta.len(), theta.len())
    }
    fn name(&self) -> &'static str {
        "agmon"
    }
}
