//! G-normal expectations from the G-heat equation, compared with the
//! Gaussian closed form for convex and concave payoffs.

use glil::band::VolatilityBand;
use glil::gheat::{gnormal_pair_default, solve_gheat, SpaceTimeGrid};
use glil::payoff::PayoffSpec;
use glil::quadrature::gaussian_expectation;

fn main() -> glil::error::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;

    let pair = gnormal_pair_default(&PayoffSpec::square(), &band)?;
    println!("E[xi^2] upper {:.6} (sigma_hi^2 = 1), lower {:.6} (sigma_lo^2 = 0.25)", pair.upper, pair.lower);

    println!("\n{:<16}  {:<9}  {:<9}  {:<9}  {:<9}", "payoff", "upper", "N(0, 1)", "lower", "N(0, 0.25)");
    for p in [PayoffSpec::relu(), PayoffSpec::abs(), PayoffSpec::lemma7_phi(1.0, 1.0)?] {
        let pair = gnormal_pair_default(&p, &band)?;
        let (hi, _) = gaussian_expectation(&p, band.hi())?;
        let (lo, _) = gaussian_expectation(&p, band.lo())?;
        println!("{:<16}  {:.6}   {:.6}   {:.6}   {:.6}", p.name(), pair.upper, hi, pair.lower, lo);
    }
    println!("convex payoffs: upper is the sigma_hi Gaussian value, lower the sigma_lo one.");
    println!("lemma7_phi is neither convex nor concave; its bounds are no Gaussian value.");

    let grid = SpaceTimeGrid::default_for(&band, 1.0);
    let u = solve_gheat(&PayoffSpec::abs(), &band, &grid)?;
    println!("\nvalue function u(1, x) for |y|:");
    for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        println!("  u({x:>4}) = {:.5}", u.value_at(x));
    }
    Ok(())
}
