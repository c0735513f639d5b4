//! Local actions three ways: the closed-form SDE action, the same action
//! through its Hamiltonian, and a Markov-jump action with no closed form.

use std::sync::Arc;

use geoaction::actions::{solve_theta, LocalAction, MarkovJumpHamiltonian};
use geoaction::curves::Curve;
use geoaction::fields::{BuiltinField, SharedField};
use geoaction::functional::geometric_action;
use geoaction::vector;

fn main() -> geoaction::Result<()> {
    let field: SharedField = Arc::new(BuiltinField::DoubleWell);
    let randers = LocalAction::sde_randers(field.clone());
    let via_h = LocalAction::from_hamiltonian(randers.hamiltonian(), true);

    let (x, y) = (vector(&[0.3, 0.4]), vector(&[-1.0, 0.5]));
    println!("closed form  {:.12}", randers.eval(&x, &y)?);
    println!("hamiltonian  {:.12}", via_h.eval(&x, &y)?);

    // Uphill along the axis from the left well to the saddle costs ΔV·2.
    let c = Curve::segment(&vector(&[-1.0, 0.0]), &vector(&[0.0, 0.0]), 400)?;
    println!("S(well -> saddle) = {:.6}", geometric_action(&randers, &c)?);

    let bd = MarkovJumpHamiltonian::birth_death(1.0, 1.0);
    let sol = solve_theta(&bd, &vector(&[2.0]), &vector(&[1.0]))?;
    println!("birth-death at x = 2: theta = {:.10} (ln 2 = {:.10})", sol.theta_hat[0], 2f64.ln());
    Ok(())
}
