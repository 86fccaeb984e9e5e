//! Bang-bang dynamic program for the scaled sum, converging to the G-normal
//! value as the number of steps grows.

use glil::band::VolatilityBand;
use glil::control::{clt_convergence, ControlLattice};
use glil::payoff::PayoffSpec;

fn main() -> glil::error::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;
    let lattice = ControlLattice::default_for(&band);
    for p in [PayoffSpec::relu(), PayoffSpec::lemma7_phi(1.0, 1.0)?] {
        let table = clt_convergence(&p, &band, &[1, 2, 5, 10, 20, 50, 100, 200], &lattice)?;
        println!("{}", table.payoff);
        println!("{}", table.to_csv());
    }
    Ok(())
}
