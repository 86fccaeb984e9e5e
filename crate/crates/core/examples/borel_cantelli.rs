//! Product coin model: factorizing capacities and both Borel-Cantelli bounds.

use glil::coin::{bc_convergent_profile, bc_divergent_check, pairwise_independence_check, ProductCoinModel, ValueSet};

fn main() -> glil::error::Result<()> {
    // each coin lands 1 with a probability somewhere in [0.5, 0.75]
    let coin = ProductCoinModel::uniform(0.5, 0.75, 20)?;

    let c = coin.cylinder(&[(1, ValueSet::ONE), (2, ValueSet::ZERO), (5, ValueSet::ONE)])?;
    println!("V(X1=1, X2=0, X5=1) = {}, v = {}", c.v_upper, c.v_lower);

    let ind = pairwise_independence_check(&coin, 3, 7, ValueSet::ONE, ValueSet::ALL)?;
    println!(
        "pair (3, 7): joint V {} vs product {}, factorizes: {}",
        ind.joint.v_upper, ind.product.v_upper, ind.upper_factorizes
    );

    println!("\n   M   1 - v(union)   exp bound");
    for m in [1, 5, 10, 20] {
        let d = bc_divergent_check(&coin, 1, m)?;
        println!("{m:>4}   {:<13.6e}  {:.6e}", d.miss, d.exp_bound);
    }

    let (profile, decreasing) = bc_convergent_profile(&coin)?;
    println!("\nsubadditive tail bound, decreasing in n: {decreasing}");
    for t in profile.iter().step_by(5) {
        println!("n = {:>2}: V(union) = {:.6} <= {:.2}", t.n, t.union_upper, t.tail_sum);
    }
    Ok(())
}
