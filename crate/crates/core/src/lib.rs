//! Geometric action functionals on curves, minimum action paths and numeric
//! existence checks for their minimizers.
//!
//! A geometric action assigns to an unparameterized curve the line integral
//! `S(γ) = ∫ ℓ(z, dz)` of a local action `ℓ(x, y)` that is positively
//! homogeneous of degree one in `y`. The crate provides:
//!
//! - [`curves`]: polyline curves, arclength resampling and length measures;
//! - [`fields`]: drift fields, their flows, equilibria, invariant manifolds and limit cycles;
//! - [`actions`]: local actions, either closed-form or built from a Hamiltonian;
//! - [`functional`]: curve functionals and the inequalities relating them;
//! - [`manifolds`]: admissible level sets and tracing functions;
//! - [`criteria`]: pointwise existence checks and grid classification;
//! - [`minimizer`]: a preconditioned descent for minimum action curves.
//!
//! The `geoaction` binary wraps these behind a scenario file format, see
//! [`scenario`] and [`cli`].

pub mod actions;
pub mod cli;
pub mod criteria;
pub mod curves;
pub mod error;
pub mod fields;
pub mod functional;
pub mod manifolds;
pub mod minimizer;
pub mod scenario;
pub mod space;

pub use error::{Error, Result};
pub use space::{vector, BoundingBox, GridSpec, Matrix, Vector};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The crate-wide seeded generator. Every randomized routine takes a `u64`
/// seed and builds its stream from this.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
