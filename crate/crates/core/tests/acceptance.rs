//! Acceptance suite: one PASS/FAIL line per check, grouped by criterion.
//! Exits non-zero when any check fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use glil::band::VolatilityBand;
use glil::coin::{bc_convergent_profile, bc_divergent_check, ProductCoinModel};
use glil::control::{clt_convergence, sandwich_check, shift_inequality_check, ControlLattice, SandwichSettings};
use glil::experiment::{run, Command, ExperimentConfig, LilSettings, CLT_FINAL_GAP, CLT_NOISE, ZERO_SHIFT_TOL};
use glil::gheat::gnormal_pair_default;
use glil::lil::{cluster_experiment, moment_ratio_check, theorem1_experiment};
use glil::parallel::{derive_seed, pool_with_threads};
use glil::payoff::PayoffSpec;
use glil::quadrature::{convex_reference, gaussian_expectation};
use glil::strategy::AdversaryStrategy;
use glil::verdict::Verdict;

const MASTER_SEED: u64 = 42;
const HORIZON: usize = 1_000_000;

type Outcome = glil::error::Result<Vec<Verdict>>;
type Criterion = (&'static str, fn() -> Outcome);

fn band() -> VolatilityBand {
    VolatilityBand::new(0.5, 1.0).unwrap()
}

fn runtime(name: &str, started: Instant, limit: f64) -> Verdict {
    Verdict::within(format!("{name} runtime seconds"), started.elapsed().as_secs_f64(), 0.0, limit)
}

fn gnormal_moments() -> Outcome {
    let started = Instant::now();
    let pair = gnormal_pair_default(&PayoffSpec::square(), &band())?;
    Ok(vec![
        Verdict::within("upper second moment", pair.upper, 1.0 - 1e-3, 1.0 + 1e-3),
        Verdict::within("lower second moment", pair.lower, 0.25 - 1e-3, 0.25 + 1e-3),
        runtime("solve", started, 10.0),
    ])
}

fn convex_closed_form() -> Outcome {
    let b = band();
    let mut out = Vec::new();
    for p in [PayoffSpec::relu(), PayoffSpec::abs(), PayoffSpec::square()] {
        let up = gnormal_pair_default(&p, &b)?.upper;
        let reference = convex_reference(&p, b.hi())?.value;
        out.push(Verdict::within(format!("{} upper minus sigma_hi quadrature", p.name()), up - reference, -1e-3, 1e-3));
        let concave = p.negated();
        let up = gnormal_pair_default(&concave, &b)?.upper;
        let (reference, _) = gaussian_expectation(&concave, b.lo())?;
        out.push(Verdict::within(
            format!("{} upper minus sigma_lo quadrature", concave.name()),
            up - reference,
            -1e-3,
            1e-3,
        ));
    }
    Ok(out)
}

fn sandwich_payoffs() -> Vec<PayoffSpec> {
    vec![PayoffSpec::relu(), PayoffSpec::square(), PayoffSpec::lemma7_phi(1.0, 1.0).unwrap()]
}

fn sandwich() -> Outcome {
    let b = band();
    let strategies = AdversaryStrategy::parse_list("random:10", MASTER_SEED)?;
    let report = sandwich_check(
        &sandwich_payoffs(),
        &strategies,
        &b,
        &ControlLattice::default_for(&b),
        &SandwichSettings {
            mc_steps: 200,
            paths: 10_000,
            dp_steps: 200,
            master_seed: MASTER_SEED,
        },
    )?;
    let inside = report.rows.iter().filter(|r| r.inside).count();
    Ok(vec![
        Verdict::within("strategy cells inside the bounds", inside as f64, report.rows.len() as f64, f64::INFINITY),
        Verdict::within("cells checked", report.rows.len() as f64, 30.0, 30.0),
        Verdict::within("max |dp - pde| at n = 200", report.max_dp_pde_gap, 0.0, 2e-2),
    ])
}

fn clt() -> Outcome {
    let b = band();
    let lattice = ControlLattice::default_for(&b);
    let mut out = Vec::new();
    for p in [PayoffSpec::relu(), PayoffSpec::lemma7_phi(1.0, 1.0)?] {
        let table = clt_convergence(&p, &b, &[10, 20, 50, 100, 200], &lattice)?;
        out.push(Verdict::within(format!("{} gap at n = 200", p.name()), table.final_gap(), 0.0, CLT_FINAL_GAP));
        out.push(Verdict::check(
            format!("{} gaps weakly decreasing up to {CLT_NOISE}", p.name()),
            table.weakly_decreasing(CLT_NOISE, 0),
        ));
    }
    Ok(out)
}

fn shift_inequality() -> Outcome {
    let b = band();
    let lattice = ControlLattice::default_for(&b);
    let phi = PayoffSpec::lemma7_phi(1.0, 1.0)?;
    let mut out = Vec::new();
    for shift in [0.0, 0.1, -0.1, 0.2, -0.2, 0.4, -0.4] {
        let c = shift_inequality_check(&phi, shift, &b, 200, &lattice)?;
        out.push(Verdict::within(
            format!("b = {shift}: factor*E[phi] - E[phi(. - b)]"),
            c.lhs - c.rhs,
            f64::NEG_INFINITY,
            c.tolerance,
        ));
        if shift == 0.0 {
            out.push(Verdict::within("b = 0 equality", (c.lhs - c.rhs).abs(), 0.0, ZERO_SHIFT_TOL));
        }
    }
    Ok(out)
}

fn borel_cantelli() -> Outcome {
    let started = Instant::now();
    let coin = ProductCoinModel::uniform(0.5, 0.75, 20)?;
    let d = bc_divergent_check(&coin, 1, 20)?;
    let (_, decreasing) = bc_convergent_profile(&coin)?;
    Ok(vec![
        Verdict::within("1 - v(union) minus 2^-20", d.miss - 2f64.powi(-20), 0.0, 0.0),
        Verdict::within("1 - v(union)", d.miss, 0.0, (-10f64).exp()),
        Verdict::check("product identity holds", d.holds),
        Verdict::check("subadditive tail bound decreasing in n", decreasing),
        runtime("coin checks", started, 1.0),
    ])
}

fn capacity_sweep() -> Outcome {
    let cfg = ExperimentConfig {
        axioms: Some(true),
        duality: Some(true),
        random_models: Some(100),
        master_seed: Some(MASTER_SEED),
        ..Default::default()
    };
    let m = run(Command::Capacity, &cfg)?;
    Ok(vec![
        Verdict::within("worst axiom residual", m.residuals["worst_axiom_residual"], 0.0, 1e-12),
        Verdict::within("worst duality residual", m.residuals["worst_duality_residual"], 0.0, 1e-12),
        Verdict::check("every model satisfies the axioms", m.pass()),
    ])
}

fn lil_settings() -> glil::error::Result<LilSettings> {
    LilSettings::resolve(&ExperimentConfig {
        master_seed: Some(MASTER_SEED),
        ..Default::default()
    })
}

fn tail_extremes() -> Outcome {
    let started = Instant::now();
    let s = lil_settings()?;
    let strategies = AdversaryStrategy::parse_list(&s.strategies, MASTER_SEED)?;
    let (result, _) = theorem1_experiment(&band(), &strategies, HORIZON, &s.seeds)?;
    let mut out = result.verdicts;
    out.push(runtime("experiment", started, 300.0));
    Ok(out)
}

fn cluster() -> Outcome {
    let s = lil_settings()?;
    let (report, _) = cluster_experiment(&band(), &[0.0, 0.3, -0.3], HORIZON, &s.seeds, s.growth)?;
    Ok(report.verdicts)
}

fn moments() -> Outcome {
    let s = lil_settings()?;
    let strategy = AdversaryStrategy::Constant { sigma: 1.0 };
    let seed = derive_seed(MASTER_SEED, 0x4D4F_4D00);
    let table = moment_ratio_check(&band(), &strategy, 4.0, &[100, 1_000, 10_000], &s.m_list, 200_000, seed)?;
    let mut out = Vec::new();
    for &m in &s.m_list {
        let rows: Vec<_> = table.rows.iter().filter(|r| r.m == m).collect();
        let first = rows.first().expect("row per n").ratio;
        let last = rows.last().expect("row per n").ratio;
        out.push(Verdict::within(format!("m = {m}: last/first"), last / first, 0.0, 1.5));
        let max = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        out.push(Verdict::within(format!("m = {m}: max ratio"), max, 0.0, 6.0));
    }
    Ok(out)
}

/// Data files of one run, keyed by name; the manifest carries wall time and
/// is left out.
fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Outcome {
    let runs = [
        (
            "sandwich",
            Command::Dual,
            ExperimentConfig {
                sandwich: Some(true),
                ..Default::default()
            },
        ),
        (
            "tail extremes",
            Command::Lil,
            ExperimentConfig {
                theorem1: Some(true),
                ..Default::default()
            },
        ),
        (
            "cluster",
            Command::Lil,
            ExperimentConfig {
                cluster: Some(true),
                b: Some(vec![0.0, 0.3, -0.3]),
                ..Default::default()
            },
        ),
    ];
    let mut out = Vec::new();
    for (name, command, cfg) in runs {
        let mut outputs = Vec::new();
        for threads in [1, 3] {
            let dir = tempfile::tempdir()?;
            let cfg = ExperimentConfig {
                master_seed: Some(MASTER_SEED),
                out: Some(dir.path().to_path_buf()),
                ..cfg.clone()
            };
            pool_with_threads(Some(threads)).install(|| run(command, &cfg))?;
            outputs.push(data_files(dir.path()));
        }
        let csvs = outputs[0].keys().filter(|k| k.ends_with(".csv")).count();
        out.push(Verdict::check(
            format!("{name}: {csvs} csv files identical under 1 and 3 threads"),
            csvs > 0 && outputs[0] == outputs[1],
        ));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("C1 g-normal moments", gnormal_moments),
        ("C2 convex closed form", convex_closed_form),
        ("C3 sandwich", sandwich),
        ("C4 clt convergence", clt),
        ("C5 shift inequality", shift_inequality),
        ("C6 borel-cantelli bounds", borel_cantelli),
        ("C7 axioms and duality", capacity_sweep),
        ("C8 tail extremes", tail_extremes),
        ("C9 cluster targets", cluster),
        ("C10 maximal moments", moments),
        ("C11 determinism", determinism),
    ];
    let mut failed = 0;
    for (label, check) in criteria {
        let started = Instant::now();
        let verdicts = check().unwrap_or_else(|e| vec![Verdict::check(format!("error: {e}"), false)]);
        let pass = verdicts.iter().all(|v| v.pass);
        if !pass {
            failed += 1;
        }
        println!(
            "{} {label} ({:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        for v in verdicts {
            println!("    {}", v.line());
        }
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
