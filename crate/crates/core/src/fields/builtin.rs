//! Built-in drift fields, selectable by name from scenario files.

use serde::{Deserialize, Serialize};

use super::FlowField;
use crate::error::{Error, Result};
use crate::space::{Matrix, Vector};

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

/// `coef · Π x_k^{powers[k]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn eval(&self, x: &Vector) -> f64 {
        self.powers
            .iter()
            .zip(x.iter())
            .fold(self.coef, |acc, (&p, &v)| acc * v.powi(p as i32))
    }

    pub fn partial(&self, x: &Vector, k: usize) -> f64 {
        let p = self.powers[k];
        if p == 0 {
            return 0.0;
        }
        self.powers
            .iter()
            .zip(x.iter())
            .enumerate()
            .fold(self.coef * p as f64, |acc, (j, (&q, &v))| {
                let q = if j == k { q - 1 } else { q };
                acc * v.powi(q as i32)
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinField {
    /// `b = (x − x³, −y)`, the negative gradient of `(x²−1)²/4 + y²/2`.
    DoubleWell,
    Constant {
        b: Vec<f64>,
    },
    /// `b = −rate · x`.
    LinearRadial {
        #[serde(default = "one")]
        rate: f64,
        #[serde(default = "two")]
        dim: usize,
    },
    /// `b = (y + x(1−r²), −x + y(1−r²))`, with a stable unit-circle cycle.
    LimitCycle,
    /// Drift `birth − death·x` of a one-species birth–death chain.
    BirthDeath1d {
        #[serde(default = "one")]
        birth: f64,
        #[serde(default = "one")]
        death: f64,
    },
    /// Component `i` is the sum of the monomials in `components[i]`.
    Polynomial {
        components: Vec<Vec<Monomial>>,
    },
}

impl BuiltinField {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { b } if b.is_empty() => Err(Error::Config("constant field needs a nonempty vector".into())),
            Self::LinearRadial { dim: 0, .. } => Err(Error::Config("linear_radial needs dim >= 1".into())),
            Self::Polynomial { components } => {
                let n = components.len();
                if n == 0 {
                    return Err(Error::Config("polynomial field needs at least one component".into()));
                }
                for (i, c) in components.iter().enumerate() {
                    for m in c {
                        if m.powers.len() != n {
                            return Err(Error::Config(format!(
                                "polynomial component {i} has a monomial with {} powers, expected {n}",
                                m.powers.len()
                            )));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `b = (−3x⁵ + 4x³ − x, −y)`: three attractors at x ∈ {−1, 0, 1}.
    pub fn three_basin() -> Self {
        let m = |coef: f64, px: u32, py: u32| Monomial {
            coef,
            powers: vec![px, py],
        };
        Self::Polynomial {
            components: vec![
                vec![m(-3.0, 5, 0), m(4.0, 3, 0), m(-1.0, 1, 0)],
                vec![m(-1.0, 0, 1)],
            ],
        }
    }
}

/// Potential of [`BuiltinField::DoubleWell`].
pub fn double_well_potential(x: &Vector) -> f64 {
    let a = x[0] * x[0] - 1.0;
    0.25 * a * a + 0.5 * x[1] * x[1]
}

impl FlowField for BuiltinField {
    fn dim(&self) -> usize {
        match self {
            Self::DoubleWell | Self::LimitCycle => 2,
            Self::Constant { b } => b.len(),
            Self::LinearRadial { dim, .. } => *dim,
            Self::BirthDeath1d { .. } => 1,
            Self::Polynomial { components } => components.len(),
        }
    }

    fn drift(&self, x: &Vector) -> Vector {
        match self {
            Self::DoubleWell => Vector::from_vec(vec![x[0] - x[0].powi(3), -x[1]]),
            Self::Constant { b } => Vector::from_column_slice(b),
            Self::LinearRadial { rate, .. } => x * (-rate),
            Self::LimitCycle => {
                let s = 1.0 - x[0] * x[0] - x[1] * x[1];
                Vector::from_vec(vec![x[1] + x[0] * s, -x[0] + x[1] * s])
            }
            Self::BirthDeath1d { birth, death } => Vector::from_vec(vec![birth - death * x[0]]),
            Self::Polynomial { components } => {
                Vector::from_iterator(components.len(), components.iter().map(|c| c.iter().map(|m| m.eval(x)).sum()))
            }
        }
    }

    fn jacobian(&self, x: &Vector) -> Matrix {
        let n = self.dim();
        match self {
            Self::DoubleWell => Matrix::from_row_slice(2, 2, &[1.0 - 3.0 * x[0] * x[0], 0.0, 0.0, -1.0]),
            Self::Constant { .. } => Matrix::zeros(n, n),
            Self::LinearRadial { rate, .. } => Matrix::identity(n, n) * (-rate),
            Self::LimitCycle => {
                let (a, b) = (x[0], x[1]);
                let s = 1.0 - a * a - b * b;
                Matrix::from_row_slice(
                    2,
                    2,
                    &[s - 2.0 * a * a, 1.0 - 2.0 * a * b, -1.0 - 2.0 * a * b, s - 2.0 * b * b],
                )
            }
            Self::BirthDeath1d { death, .. } => Matrix::from_element(1, 1, -death),
            Self::Polynomial { components } => Matrix::from_fn(n, n, |i, k| components[i].iter().map(|m| m.partial(x, k)).sum()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{jacobian_fd, vector};

    #[test]
    fn analytic_jacobians_match_differences() {
        let fields = [
            BuiltinField::DoubleWell,
            BuiltinField::LimitCycle,
            BuiltinField::three_basin(),
            BuiltinField::LinearRadial { rate: 0.7, dim: 2 },
        ];
        let x = vector(&[0.37, -0.81]);
        for f in &fields {
            let fd = jacobian_fd(|z| f.drift(z), &x, 1e-5);
            assert!((f.jacobian(&x) - fd).norm() < 1e-8, "{f:?}");
        }
    }

    #[test]
    fn double_well_is_negative_potential_gradient() {
        let x = vector(&[0.4, 0.9]);
        let g = crate::space::gradient_fd(double_well_potential, &x, 1e-6);
        assert!((BuiltinField::DoubleWell.drift(&x) + g).norm() < 1e-9);
    }

    #[test]
    fn polynomial_rejects_ragged_powers() {
        let f = BuiltinField::Polynomial {
            components: vec![vec![Monomial {
                coef: 1.0,
                powers: vec![1, 0],
            }]],
        };
        assert!(f.validate().is_err());
    }
}
