//! Drives a command from a JSON config, as the `glil` binary does, and
//! lists the files it writes.

use glil::experiment::{run, Command, ExperimentConfig};

fn main() -> glil::error::Result<()> {
    let out = std::env::temp_dir().join("glil-config-run");
    let mut cfg = ExperimentConfig::from_json(
        r#"{ "band": "0.5,1.0", "payoff": "relu,lemma7_phi(1,1)", "n": [10, 50, 200], "clt": true }"#,
    )?;
    cfg.out = Some(out.clone());
    let manifest = run(Command::Dual, &cfg)?;
    for line in &manifest.summary {
        println!("{line}");
    }
    for v in &manifest.verdicts {
        println!("{}", v.line());
    }
    println!("wrote {:?} to {}", manifest.files, out.display());
    Ok(())
}
