//! Tail limsup and liminf of the LIL statistic under several volatility
//! strategies. Pass a horizon as the first argument (default 200000).

use glil::band::VolatilityBand;
use glil::lil::theorem1_experiment;
use glil::parallel::derive_seed;
use glil::strategy::AdversaryStrategy;

fn main() -> glil::error::Result<()> {
    let horizon: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let band = VolatilityBand::new(0.5, 1.0)?;
    let strategies = AdversaryStrategy::parse_list("const:1,const:0.5,periodic:0.5/1,feedback:0.25", 7)?;
    let seeds: Vec<u64> = (0..5).map(|k| derive_seed(7, k)).collect();
    let (result, _) = theorem1_experiment(&band, &strategies, horizon, &seeds)?;
    for r in &result.reports {
        println!(
            "{:<24} seed {:>20}: sup {:>7.4}  inf {:>7.4}  R_N {:>7.4}",
            r.strategy, r.seed, r.tail_sup, r.tail_inf, r.final_statistic
        );
    }
    println!();
    for v in &result.verdicts {
        println!("{}", v.line());
    }
    Ok(())
}
