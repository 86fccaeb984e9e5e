//! Shifting a nonnegative even payoff costs at most a Gaussian factor in the
//! lower expectation.

use glil::band::VolatilityBand;
use glil::control::{shift_inequality_check, ControlLattice};
use glil::payoff::PayoffSpec;

fn main() -> glil::error::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;
    let lattice = ControlLattice::default_for(&band);
    let phi = PayoffSpec::lemma7_phi(1.0, 1.0)?;
    println!("    b   factor   factor*E[phi]   E[phi(. - b)]   pass");
    for b in [0.0, 0.1, 0.2, 0.3, 0.4, -0.4] {
        let c = shift_inequality_check(&phi, b, &band, 200, &lattice)?;
        println!("{:>5}   {:.4}   {:.6}        {:.6}        {}", c.b, c.factor, c.lhs, c.rhs, c.pass);
    }
    Ok(())
}
