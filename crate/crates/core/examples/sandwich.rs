//! Monte Carlo values of feasible volatility strategies sit between the
//! lower and upper dynamic-programming values.

use glil::band::VolatilityBand;
use glil::control::{sandwich_check, ControlLattice, SandwichSettings};
use glil::payoff::PayoffSpec;
use glil::strategy::AdversaryStrategy;

fn main() -> glil::error::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;
    let strategies = AdversaryStrategy::parse_list("const:1,const:0.5,periodic:0.5/1,feedback:0,random:3", 42)?;
    let payoffs = [PayoffSpec::relu(), PayoffSpec::lemma7_phi(1.0, 1.0)?];
    let report = sandwich_check(
        &payoffs,
        &strategies,
        &band,
        &ControlLattice::default_for(&band),
        &SandwichSettings {
            mc_steps: 100,
            paths: 4000,
            dp_steps: 200,
            master_seed: 42,
        },
    )?;
    println!("{:<16} {:<26} {:>8} {:>8} {:>8}  inside", "payoff", "strategy", "lower", "mc", "upper");
    for r in &report.rows {
        println!(
            "{:<16} {:<26} {:>8.4} {:>8.4} {:>8.4}  {}",
            r.payoff, r.strategy, r.dp_lower, r.mc.estimate, r.dp_upper, r.inside
        );
    }
    println!("max |dp - pde| = {:.2e}", report.max_dp_pde_gap);
    Ok(())
}
