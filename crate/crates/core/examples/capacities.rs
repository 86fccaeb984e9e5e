//! Upper and lower expectations and capacities of a small finite model.

use glil::sublinear::{verify_duality, verify_sublinear_axioms, FinitePriorModel};

fn main() -> glil::error::Result<()> {
    // three market states, two candidate priors
    let model = FinitePriorModel::new(
        vec!["down".into(), "flat".into(), "up".into()],
        vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]],
    )?;

    let payoff = [-1.0, 0.0, 2.0];
    let pair = model.expectation_pair(&payoff)?;
    println!("payoff {payoff:?}: upper {:.3}, lower {:.3}", pair.upper, pair.lower);

    let up = ["up"];
    let cap = model.capacity_pair(&up)?;
    println!("event {{up}}: V = {:.3}, v = {:.3}", cap.v_upper, cap.v_lower);

    let d = verify_duality(&model, &up)?;
    println!("V(A) + v(A^c) = {:.3} + {:.3}, residual {:e}", d.v_upper, d.v_lower_complement, d.residual);

    let rvs = vec![payoff.to_vec(), vec![3.0, -2.0, 0.5], vec![1.0, 1.0, -4.0]];
    let report = verify_sublinear_axioms(&model, &rvs)?;
    println!("axioms hold: {}, worst residual {:e}", report.all_pass(), report.worst_residual());
    Ok(())
}
