//! A block-steering strategy drives the LIL statistic close to any target
//! inside (-sigma_lo, sigma_lo).

use glil::band::VolatilityBand;
use glil::lil::cluster_experiment;

fn main() -> glil::error::Result<()> {
    let band = VolatilityBand::new(0.5, 1.0)?;
    let (report, runs) = cluster_experiment(&band, &[0.0, 0.3, -0.3, 0.45], 1_000_000, &[1, 2, 3], 1.5)?;
    print!("{}", report.to_csv());
    for v in &report.verdicts {
        println!("{}", v.line());
    }
    let last = runs.last().expect("one run per target and seed");
    println!("\nlast checkpoints of {} (seed {}):", last.strategy, last.seed);
    let stats = last.statistics();
    for (n, r) in last.checkpoints.iter().zip(&stats).skip(stats.len() - 5) {
        println!("  n = {n:>7}: R = {:.4}", r.unwrap_or(f64::NAN));
    }
    Ok(())
}
