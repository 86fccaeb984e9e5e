//! Reproducible experiment drivers behind the `glil` command.
//!
//! Each command resolves an [`ExperimentConfig`] into fully populated
//! settings (validated before any computation), runs the engines, writes
//! data files into the output directory and returns a [`RunManifest`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::band::VolatilityBand;
use crate::coin::{bc_convergent_profile, bc_divergent_check, ProductCoinModel};
use crate::control::{
    clt_convergence, sandwich_check, shift_inequality_check, ControlLattice, SandwichSettings, DP_PDE_TOLERANCE,
};
use crate::error::{config, input, Error, Result};
use crate::gheat::{solve_gheat, SpaceTimeGrid};
use crate::lil::{cluster_experiment, moment_ratio_check, theorem1_experiment, LILTrajectory};
use crate::parallel::{derive_seed, item_rng};
use crate::payoff::{csv_name, PayoffSpec};
use crate::quadrature::convex_reference;
use crate::strategy::AdversaryStrategy;
use crate::sublinear::{verify_duality, verify_sublinear_axioms, FinitePriorModel, EXACT_TOL};
use crate::verdict::{all_pass, Verdict};

/// Final gap allowed in the convergence table.
pub const CLT_FINAL_GAP: f64 = 5e-2;
/// Noise allowed when checking that convergence gaps decrease.
pub const CLT_NOISE: f64 = 5e-3;
/// Zero-shift equality tolerance.
pub const ZERO_SHIFT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => input(format!("unknown output format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Dual,
    Lil,
    Capacity,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Dual => "dual",
            Command::Lil => "lil",
            Command::Capacity => "capacity",
        }
    }
}

/// Raw parameters from a config file and/or command-line flags. Every field
/// is optional; commands fill in defaults and echo the resolved values in
/// the manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `"LO,HI"`.
    pub band: Option<String>,
    /// Payoff name, `@file`, or a comma-separated list of them.
    pub payoff: Option<String>,
    /// `"L,dx,dt"` for the PDE grid.
    pub grid: Option<String>,
    pub t_end: Option<f64>,
    pub n: Option<Vec<usize>>,
    #[serde(rename = "N", alias = "horizon")]
    pub horizon: Option<usize>,
    pub strategies: Option<String>,
    pub b: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub master_seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub r: Option<f64>,
    pub m: Option<Vec<usize>>,
    pub growth: Option<f64>,
    pub random_models: Option<usize>,
    pub p: Option<f64>,
    pub p_hi: Option<f64>,
    #[serde(rename = "M", alias = "coins")]
    pub coins: Option<usize>,
    pub clt: Option<bool>,
    pub lemma5: Option<bool>,
    pub sandwich: Option<bool>,
    pub theorem1: Option<bool>,
    pub cluster: Option<bool>,
    pub moments: Option<bool>,
    pub axioms: Option<bool>,
    pub bc2: Option<bool>,
    pub duality: Option<bool>,
}

macro_rules! overlay_fields {
    ($base:ident, $over:ident; $($f:ident),*) => {
        ExperimentConfig { $($f: $over.$f.or($base.$f)),* }
    };
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: ExperimentConfig) -> Self {
        let base = self;
        overlay_fields!(base, over; band, payoff, grid, t_end, n, horizon, strategies, b, seeds,
            master_seed, out, format, paths, steps, r, m, growth, random_models, p, p_hi, coins,
            clt, lemma5, sandwich, theorem1, cluster, moments, axioms, bc2, duality)
    }

    fn band_or(&self, default: (f64, f64)) -> Result<VolatilityBand> {
        match &self.band {
            Some(text) => text.parse(),
            None => VolatilityBand::new(default.0, default.1),
        }
    }

    fn flag(v: Option<bool>) -> bool {
        v.unwrap_or(false)
    }
}

/// Splits on commas that are not inside parentheses.
pub fn split_top_level(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn parse_payoffs(names: &[String]) -> Result<Vec<PayoffSpec>> {
    names.iter().map(|n| PayoffSpec::parse_named(n)).collect()
}

/// Self-describing record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub version: String,
    /// Resolved settings, defaults included.
    pub settings: serde_json::Value,
    pub wall_time_seconds: f64,
    pub verdicts: Vec<Verdict>,
    pub residuals: BTreeMap<String, f64>,
    pub files: Vec<String>,
    /// Headline numbers for the terminal.
    pub summary: Vec<String>,
}

impl RunManifest {
    pub fn pass(&self) -> bool {
        all_pass(&self.verdicts)
    }

    /// 0 when every verdict passed, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            4
        }
    }
}

struct Recorder {
    out: Option<PathBuf>,
    format: OutputFormat,
    files: Vec<String>,
}

impl Recorder {
    fn new(out: Option<PathBuf>, format: OutputFormat) -> Result<Self> {
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self {
            out,
            format,
            files: Vec::new(),
        })
    }

    /// Writes `stem.csv` or `stem.json` depending on the output format.
    fn table<T: Serialize + ?Sized>(&mut self, stem: &str, csv: impl FnOnce() -> String, json: &T) -> Result<()> {
        let Some(dir) = &self.out else {
            return Ok(());
        };
        let (name, body) = match self.format {
            OutputFormat::Csv => (format!("{stem}.csv"), csv()),
            OutputFormat::Json => (format!("{stem}.json"), serde_json::to_string_pretty(json)? + "\n"),
        };
        std::fs::write(dir.join(&name), body)?;
        self.files.push(name);
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let Some(dir) = &self.out else {
            return Ok(());
        };
        std::fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(
        mut self,
        command: Command,
        settings: impl Serialize,
        started: Instant,
        verdicts: Vec<Verdict>,
        residuals: BTreeMap<String, f64>,
        summary: Vec<String>,
    ) -> Result<RunManifest> {
        if self.out.is_some() {
            self.files.push("manifest.json".into());
        }
        let manifest = RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            settings: serde_json::to_value(settings)?,
            wall_time_seconds: started.elapsed().as_secs_f64(),
            verdicts,
            residuals,
            files: self.files.clone(),
            summary,
        };
        if let Some(dir) = &self.out {
            std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        }
        Ok(manifest)
    }
}

/// Runs `command` with `cfg`.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<RunManifest> {
    match command {
        Command::Solve => cmd_solve(cfg),
        Command::Dual => cmd_dual(cfg),
        Command::Lil => cmd_lil(cfg),
        Command::Capacity => cmd_capacity(cfg),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSettings {
    pub band: VolatilityBand,
    pub payoff: String,
    pub grid: SpaceTimeGrid,
    pub format: OutputFormat,
}

impl SolveSettings {
    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self> {
        let band = cfg.band_or((0.5, 1.0))?;
        let t_end = cfg.t_end.unwrap_or(1.0);
        let grid = match &cfg.grid {
            Some(text) => {
                let v: Vec<f64> = text
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Config(format!("grid `{text}` must be L,dx,dt")))?;
                if v.len() != 3 {
                    return config(format!("grid `{text}` must be L,dx,dt"));
                }
                SpaceTimeGrid {
                    half_width: v[0],
                    dx: v[1],
                    dt: v[2],
                    t_end,
                }
            }
            None => SpaceTimeGrid::default_for(&band, t_end),
        };
        grid.validate(&band)?;
        let payoff = cfg.payoff.clone().unwrap_or_else(|| "square".into());
        PayoffSpec::parse_named(&payoff)?;
        Ok(Self {
            band,
            payoff,
            grid,
            format: cfg.format.unwrap_or_default(),
        })
    }
}

#[derive(Serialize)]
struct ValueRow {
    x: f64,
    upper: f64,
    lower: f64,
}

/// Solves the G-heat equation for `phi` and `-phi` and reports the
/// G-normal expectation pair.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let started = Instant::now();
    let s = SolveSettings::resolve(cfg)?;
    let mut rec = Recorder::new(cfg.out.clone(), s.format)?;
    let payoff = PayoffSpec::parse_named(&s.payoff)?;
    let up = solve_gheat(&payoff, &s.band, &s.grid)?;
    let down = solve_gheat(&payoff.negated(), &s.band, &s.grid)?;
    let upper = up.value_at(0.0);
    let lower = -down.value_at(0.0);
    let rows: Vec<ValueRow> = up
        .xs
        .iter()
        .zip(up.values.iter().zip(&down.values))
        .map(|(&x, (&u, &d))| ValueRow { x, upper: u, lower: -d })
        .collect();
    rec.table(
        "value_function",
        || {
            let mut text = String::from("x,upper,lower\n");
            for r in &rows {
                text.push_str(&format!("{},{},{}\n", r.x, r.upper, r.lower));
            }
            text
        },
        &rows,
    )?;
    let mut residuals = BTreeMap::new();
    residuals.insert("upper".into(), upper);
    residuals.insert("lower".into(), lower);
    residuals.insert("clamp_mass".into(), up.clamp_mass);
    let mut summary = vec![format!("upper = {upper}"), format!("lower = {lower}")];
    if payoff.is_convex(1e-9) {
        let reference = convex_reference(&payoff, s.band.hi())?;
        residuals.insert("convex_reference".into(), reference.value);
        summary.push(format!("gaussian reference at sigma_hi = {}", reference.value));
    }
    rec.finish(Command::Solve, &s, started, Vec::new(), residuals, summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct DualSettings {
    pub band: VolatilityBand,
    pub lattice: ControlLattice,
    pub clt: bool,
    pub lemma5: bool,
    pub sandwich: bool,
    pub clt_payoffs: Vec<String>,
    pub n_list: Vec<usize>,
    pub lemma5_payoffs: Vec<String>,
    pub b_list: Vec<f64>,
    pub dp_steps: usize,
    pub sandwich_payoffs: Vec<String>,
    pub strategies: String,
    pub paths: usize,
    pub mc_steps: usize,
    pub master_seed: Option<u64>,
    pub format: OutputFormat,
}

impl DualSettings {
    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self> {
        let band = cfg.band_or((0.5, 1.0))?;
        let any = cfg.clt.is_some() || cfg.lemma5.is_some() || cfg.sandwich.is_some();
        let (clt, lemma5, sandwich) = if any {
            (
                ExperimentConfig::flag(cfg.clt),
                ExperimentConfig::flag(cfg.lemma5),
                ExperimentConfig::flag(cfg.sandwich),
            )
        } else {
            (true, true, true)
        };
        let given = cfg.payoff.as_deref().map(split_top_level);
        let pick = |default: &[&str]| given.clone().unwrap_or_else(|| default.iter().map(|s| s.to_string()).collect());
        let s = Self {
            band,
            lattice: ControlLattice::default_for(&band),
            clt,
            lemma5,
            sandwich,
            clt_payoffs: pick(&["relu"]),
            n_list: cfg.n.clone().unwrap_or_else(|| vec![10, 20, 50, 100, 200]),
            lemma5_payoffs: pick(&["lemma7_phi(1,1)"]),
            b_list: cfg.b.clone().unwrap_or_else(|| vec![0.0, 0.1, -0.1, 0.2, -0.2, 0.4, -0.4]),
            dp_steps: cfg.steps.unwrap_or(200),
            sandwich_payoffs: pick(&["relu", "square", "lemma7_phi(1,1)"]),
            strategies: cfg.strategies.clone().unwrap_or_else(|| "random:10".into()),
            paths: cfg.paths.unwrap_or(10_000),
            mc_steps: cfg.steps.unwrap_or(200),
            master_seed: cfg.master_seed,
            format: cfg.format.unwrap_or_default(),
        };
        s.lattice.validate(&band)?;
        if s.sandwich && s.master_seed.is_none() {
            return config("--master-seed is required for the sandwich experiment");
        }
        if s.dp_steps == 0 || s.paths < 2 {
            return config("steps must be positive and paths at least 2");
        }
        for list in [&s.clt_payoffs, &s.lemma5_payoffs, &s.sandwich_payoffs] {
            parse_payoffs(list)?;
        }
        if s.sandwich {
            AdversaryStrategy::parse_list(&s.strategies, 0)?;
        }
        Ok(s)
    }
}

#[derive(Serialize)]
struct ShiftRow {
    payoff: String,
    #[serde(flatten)]
    check: crate::control::ShiftCheck,
}

/// Sandwich, convergence and shift-inequality checks for the control
/// representation.
pub fn cmd_dual(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let started = Instant::now();
    let s = DualSettings::resolve(cfg)?;
    let mut rec = Recorder::new(cfg.out.clone(), s.format)?;
    let mut verdicts = Vec::new();
    let mut residuals = BTreeMap::new();
    let mut summary = Vec::new();

    if s.clt {
        let mut tables = Vec::new();
        for p in parse_payoffs(&s.clt_payoffs)? {
            let table = clt_convergence(&p, &s.band, &s.n_list, &s.lattice)?;
            let name = p.name().to_string();
            verdicts.push(Verdict::within(format!("clt {name}: final gap"), table.final_gap(), 0.0, CLT_FINAL_GAP));
            verdicts.push(Verdict::check(
                format!("clt {name}: gaps weakly decreasing"),
                table.weakly_decreasing(CLT_NOISE, 0),
            ));
            summary.push(format!("clt {name}: final gap {}", table.final_gap()));
            tables.push(table);
        }
        rec.table(
            "clt",
            || {
                if tables.len() == 1 {
                    tables[0].to_csv()
                } else {
                    let mut out = String::from("payoff,n,dp_upper,pde_value,gap\n");
                    for t in &tables {
                        for r in &t.rows {
                            out.push_str(&format!("{},{},{},{},{}\n", csv_name(&t.payoff), r.n, r.dp_upper, r.pde_value, r.gap));
                        }
                    }
                    out
                }
            },
            &tables,
        )?;
    }

    if s.lemma5 {
        let mut rows = Vec::new();
        for p in parse_payoffs(&s.lemma5_payoffs)? {
            for &b in &s.b_list {
                let check = shift_inequality_check(&p, b, &s.band, s.dp_steps, &s.lattice)?;
                verdicts.push(Verdict::check(format!("shift {} b = {b}", p.name()), check.pass));
                if b == 0.0 {
                    verdicts.push(Verdict::within(
                        format!("shift {} b = 0 equality", p.name()),
                        (check.lhs - check.rhs).abs(),
                        0.0,
                        ZERO_SHIFT_TOL,
                    ));
                }
                rows.push(ShiftRow {
                    payoff: p.name().to_string(),
                    check,
                });
            }
        }
        summary.push(format!("shift inequality rows: {}", rows.len()));
        rec.table(
            "lemma5",
            || {
                let mut out = String::from("payoff,b,factor,lhs,rhs,tolerance,pass\n");
                for r in &rows {
                    let c = &r.check;
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        csv_name(&r.payoff), c.b, c.factor, c.lhs, c.rhs, c.tolerance, c.pass
                    ));
                }
                out
            },
            &rows,
        )?;
    }

    if s.sandwich {
        let master = s.master_seed.expect("validated");
        let strategies = AdversaryStrategy::parse_list(&s.strategies, master)?;
        let payoffs = parse_payoffs(&s.sandwich_payoffs)?;
        let report = sandwich_check(
            &payoffs,
            &strategies,
            &s.band,
            &s.lattice,
            &SandwichSettings {
                mc_steps: s.mc_steps,
                paths: s.paths,
                dp_steps: s.dp_steps,
                master_seed: master,
            },
        )?;
        verdicts.push(Verdict::check("sandwich: every strategy inside the bounds", report.all_inside()));
        verdicts.push(Verdict::within(
            "sandwich: max |dp - pde|",
            report.max_dp_pde_gap,
            0.0,
            DP_PDE_TOLERANCE,
        ));
        residuals.insert("max_dp_pde_gap".into(), report.max_dp_pde_gap);
        summary.push(format!(
            "sandwich: {} rows, all inside = {}",
            report.rows.len(),
            report.all_inside()
        ));
        rec.table("sandwich", || report.to_csv(), &report)?;
    }
    rec.finish(Command::Dual, &s, started, verdicts, residuals, summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct LilSettings {
    pub band: VolatilityBand,
    pub horizon: usize,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    pub theorem1: bool,
    pub cluster: bool,
    pub moments: bool,
    pub strategies: String,
    pub b_list: Vec<f64>,
    pub growth: f64,
    pub moment_strategies: String,
    pub r: f64,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub paths: usize,
    pub format: OutputFormat,
}

impl LilSettings {
    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self> {
        let band = cfg.band_or((0.5, 1.0))?;
        let horizon = cfg.horizon.unwrap_or(1_000_000);
        if horizon < 3 {
            return config(format!("N must be at least 3, got {horizon}"));
        }
        let Some(master_seed) = cfg.master_seed else {
            return config("--master-seed is required for lil experiments");
        };
        let seeds = cfg
            .seeds
            .clone()
            .unwrap_or_else(|| (0..5).map(|k| derive_seed(master_seed, k)).collect());
        let any = cfg.theorem1.is_some() || cfg.cluster.is_some() || cfg.moments.is_some();
        let theorem1 = if any { ExperimentConfig::flag(cfg.theorem1) } else { true };
        let (lo, hi) = (band.lo(), band.hi());
        let default_strategies = format!("const:{hi},const:{lo},periodic:{lo}/{hi},feedback:{},random:3", 0.5 * lo);
        let s = Self {
            band,
            horizon,
            master_seed,
            seeds,
            theorem1,
            cluster: ExperimentConfig::flag(cfg.cluster),
            moments: ExperimentConfig::flag(cfg.moments),
            strategies: cfg.strategies.clone().unwrap_or(default_strategies),
            b_list: cfg.b.clone().unwrap_or_else(|| vec![0.0, 0.6 * lo, -0.6 * lo]),
            growth: cfg.growth.unwrap_or(1.5),
            moment_strategies: cfg.strategies.clone().unwrap_or_else(|| format!("const:{hi}")),
            r: cfg.r.unwrap_or(4.0),
            n_list: cfg.n.clone().unwrap_or_else(|| vec![100, 1000, 10_000]),
            m_list: cfg.m.clone().unwrap_or_else(|| vec![0, 100]),
            paths: cfg.paths.unwrap_or(200_000),
            format: cfg.format.unwrap_or_default(),
        };
        if s.seeds.is_empty() {
            return config("seed list is empty");
        }
        AdversaryStrategy::parse_list(&s.strategies, master_seed)?;
        Ok(s)
    }
}

fn file_label(text: &str) -> String {
    text.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn write_trajectories(rec: &mut Recorder, prefix: &str, runs: &[LILTrajectory]) -> Result<()> {
    for t in runs {
        let stem = format!("{prefix}_{}_{}", file_label(&t.strategy), t.seed);
        rec.table(&stem, || t.to_csv(), t)?;
    }
    Ok(())
}

/// Desk-scale LIL experiments: tail extremes, cluster targeting and maximal
/// moment ratios.
pub fn cmd_lil(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let started = Instant::now();
    let s = LilSettings::resolve(cfg)?;
    let mut rec = Recorder::new(cfg.out.clone(), s.format)?;
    let mut verdicts = Vec::new();
    let mut residuals = BTreeMap::new();
    let mut summary = Vec::new();

    if s.theorem1 {
        let strategies = AdversaryStrategy::parse_list(&s.strategies, s.master_seed)?;
        let (result, runs) = theorem1_experiment(&s.band, &strategies, s.horizon, &s.seeds)?;
        write_trajectories(&mut rec, "traj", &runs)?;
        rec.json("theorem1.json", &result)?;
        for r in &result.reports {
            summary.push(format!(
                "{} seed {}: tail_sup {:.4} tail_inf {:.4}",
                r.strategy, r.seed, r.tail_sup, r.tail_inf
            ));
        }
        verdicts.extend(result.verdicts);
    }
    if s.cluster {
        let (report, runs) = cluster_experiment(&s.band, &s.b_list, s.horizon, &s.seeds, s.growth)?;
        write_trajectories(&mut rec, "cluster_traj", &runs)?;
        rec.table("cluster", || report.to_csv(), &report)?;
        for r in &report.rows {
            summary.push(format!("b {} seed {}: min distance {:.4}", r.b, r.seed, r.min_distance));
        }
        verdicts.extend(report.verdicts);
    }
    if s.moments {
        let strategies = AdversaryStrategy::parse_list(&s.moment_strategies, s.master_seed)?;
        let mut tables = Vec::new();
        for (j, strategy) in strategies.iter().enumerate() {
            let seed = derive_seed(s.master_seed, 0x4D4F_4D00 + j as u64);
            let table = moment_ratio_check(&s.band, strategy, s.r, &s.n_list, &s.m_list, s.paths, seed)?;
            for v in &table.verdicts {
                verdicts.push(Verdict {
                    name: format!("moments {}: {}", table.strategy, v.name),
                    ..v.clone()
                });
            }
            residuals.insert(format!("classical_constant {}", table.strategy), table.classical_constant);
            summary.push(format!(
                "moments {}: max ratio {:.4}",
                table.strategy,
                table.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max)
            ));
            tables.push(table);
        }
        rec.table(
            "moments",
            || {
                let mut out = String::from("strategy,m,n,ratio,std_error\n");
                for t in &tables {
                    for r in &t.rows {
                        out.push_str(&format!("{},{},{},{},{}\n", t.strategy, r.m, r.n, r.ratio, r.std_error));
                    }
                }
                out
            },
            &tables,
        )?;
    }
    rec.finish(Command::Lil, &s, started, verdicts, residuals, summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacitySettings {
    pub axioms: bool,
    pub duality: bool,
    pub bc2: bool,
    pub random_models: usize,
    pub master_seed: u64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub coins: usize,
    pub format: OutputFormat,
}

impl CapacitySettings {
    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self> {
        let any = cfg.axioms.is_some() || cfg.duality.is_some() || cfg.bc2.is_some();
        let on = |f: Option<bool>| if any { ExperimentConfig::flag(f) } else { true };
        let p_lo = cfg.p.unwrap_or(0.5);
        let s = Self {
            axioms: on(cfg.axioms),
            duality: on(cfg.duality),
            bc2: on(cfg.bc2),
            random_models: cfg.random_models.unwrap_or(100),
            master_seed: cfg.master_seed.unwrap_or(0),
            p_lo,
            p_hi: cfg.p_hi.unwrap_or(0.5 * (1.0 + p_lo)),
            coins: cfg.coins.unwrap_or(20),
            format: cfg.format.unwrap_or_default(),
        };
        if s.bc2 {
            ProductCoinModel::uniform(s.p_lo, s.p_hi, s.coins)?;
        }
        Ok(s)
    }
}

/// Random finite prior model number `index`, with 2 to 6 atoms and 1 to 5
/// priors.
pub fn random_model(master_seed: u64, index: u64) -> FinitePriorModel {
    let mut rng = item_rng(master_seed, index);
    let atoms = rng.gen_range(2..=6);
    let priors = rng.gen_range(1..=5);
    FinitePriorModel::random(&mut rng, atoms, priors)
}

/// Random variables used for the axiom checks of one model.
pub fn random_variables(master_seed: u64, index: u64, atoms: usize) -> Vec<Vec<f64>> {
    let mut rng = item_rng(derive_seed(master_seed, 0xA710_0000), index);
    (0..5)
        .map(|_| (0..atoms).map(|_| rng.gen_range(-5.0..5.0)).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
struct ModelRow {
    model: usize,
    atoms: usize,
    priors: usize,
    axiom_residual: f64,
    axioms_pass: bool,
    duality_residual: f64,
    events: usize,
}

/// Axiom and duality sweeps over random finite models and the product
/// coin Borel-Cantelli tables.
pub fn cmd_capacity(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let started = Instant::now();
    let s = CapacitySettings::resolve(cfg)?;
    let mut rec = Recorder::new(cfg.out.clone(), s.format)?;
    let mut verdicts = Vec::new();
    let mut residuals = BTreeMap::new();
    let mut summary = Vec::new();

    if s.axioms || s.duality {
        let mut rows = Vec::with_capacity(s.random_models);
        for j in 0..s.random_models {
            let model = random_model(s.master_seed, j as u64);
            let k = model.num_atoms();
            let mut row = ModelRow {
                model: j,
                atoms: k,
                priors: model.priors().len(),
                axiom_residual: 0.0,
                axioms_pass: true,
                duality_residual: 0.0,
                events: 0,
            };
            if s.axioms {
                let report = verify_sublinear_axioms(&model, &random_variables(s.master_seed, j as u64, k))?;
                row.axiom_residual = report.worst_residual();
                row.axioms_pass = report.all_pass();
            }
            if s.duality {
                for mask in 0..(1u32 << k) {
                    let event: Vec<&str> = (0..k)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| model.atoms()[i].as_str())
                        .collect();
                    let d = verify_duality(&model, &event)?;
                    row.duality_residual = row.duality_residual.max(d.residual);
                    row.events += 1;
                }
            }
            rows.push(row);
        }
        let worst_axiom = rows.iter().map(|r| r.axiom_residual).fold(0.0, f64::max);
        let worst_duality = rows.iter().map(|r| r.duality_residual).fold(0.0, f64::max);
        if s.axioms {
            verdicts.push(Verdict::check("axioms hold on every model", rows.iter().all(|r| r.axioms_pass)));
            verdicts.push(Verdict::within("worst axiom residual", worst_axiom, 0.0, EXACT_TOL));
            residuals.insert("worst_axiom_residual".into(), worst_axiom);
        }
        if s.duality {
            verdicts.push(Verdict::within("worst duality residual", worst_duality, 0.0, EXACT_TOL));
            residuals.insert("worst_duality_residual".into(), worst_duality);
        }
        summary.push(format!(
            "{} models: worst axiom residual {worst_axiom:e}, worst duality residual {worst_duality:e}",
            rows.len()
        ));
        rec.table(
            "models",
            || {
                let mut out = String::from("model,atoms,priors,axiom_residual,axioms_pass,duality_residual,events\n");
                for r in &rows {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        r.model, r.atoms, r.priors, r.axiom_residual, r.axioms_pass, r.duality_residual, r.events
                    ));
                }
                out
            },
            &rows,
        )?;
    }

    if s.bc2 {
        let coin = ProductCoinModel::uniform(s.p_lo, s.p_hi, s.coins)?;
        let divergent = (1..=s.coins)
            .map(|m| bc_divergent_check(&coin, 1, m))
            .collect::<Result<Vec<_>>>()?;
        let last = divergent.last().expect("at least one coin");
        let exact = (1.0 - s.p_lo).powi(s.coins as i32);
        verdicts.push(Verdict::check("product identity and exponential bound", divergent.iter().all(|d| d.holds)));
        verdicts.push(Verdict::within(
            "miss probability against closed form",
            (last.miss - exact).abs(),
            0.0,
            EXACT_TOL,
        ));
        let (profile, decreasing) = bc_convergent_profile(&coin)?;
        verdicts.push(Verdict::check("subadditive tail bound decreasing in n", decreasing));
        residuals.insert("bc2_miss".into(), last.miss);
        residuals.insert("bc2_exp_bound".into(), last.exp_bound);
        summary.push(format!(
            "M = {}: 1 - v(union) = {:e}, exp bound {:e}",
            s.coins, last.miss, last.exp_bound
        ));
        rec.table(
            "bc2",
            || {
                let mut out = String::from("M,union_lower,miss,product,exp_bound,holds\n");
                for d in &divergent {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        d.horizon, d.union_lower, d.miss, d.product, d.exp_bound, d.holds
                    ));
                }
                out
            },
            &divergent,
        )?;
        rec.table(
            "bc1",
            || {
                let mut out = String::from("n,union_upper,tail_sum,holds\n");
                for t in &profile {
                    out.push_str(&format!("{},{},{},{}\n", t.n, t.union_upper, t.tail_sum, t.holds));
                }
                out
            },
            &profile,
        )?;
    }
    rec.finish(Command::Capacity, &s, started, verdicts, residuals, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_level_split_keeps_arguments() {
        assert_eq!(
            split_top_level("relu, lemma7_phi(1,1),indicator_smooth(-1,1,0.1)"),
            vec!["relu", "lemma7_phi(1,1)", "indicator_smooth(-1,1,0.1)"]
        );
    }

    #[test]
    fn flags_override_file_values() {
        let file = ExperimentConfig::from_json(r#"{"band":"0.5,1.0","N":1000,"master_seed":3}"#).unwrap();
        let flags = ExperimentConfig {
            horizon: Some(2000),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.horizon, Some(2000));
        assert_eq!(merged.master_seed, Some(3));
        assert!(ExperimentConfig::from_json(r#"{"bnad":"1,1"}"#).is_err());
    }

    #[test]
    fn solve_defaults_and_band_validation() {
        let m = cmd_solve(&ExperimentConfig {
            payoff: Some("square".into()),
            ..Default::default()
        })
        .unwrap();
        assert!((m.residuals["upper"] - 1.0).abs() < 1e-3);
        assert!((m.residuals["lower"] - 0.25).abs() < 1e-3);
        let err = cmd_solve(&ExperimentConfig {
            band: Some("1.0,0.5".into()),
            ..Default::default()
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("sigma_lo <= sigma_hi"));
    }

    #[test]
    fn lil_guards() {
        let err = cmd_lil(&ExperimentConfig {
            horizon: Some(2),
            master_seed: Some(1),
            ..Default::default()
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = cmd_lil(&ExperimentConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn capacity_bc2_table() {
        let m = cmd_capacity(&ExperimentConfig {
            bc2: Some(true),
            p: Some(0.5),
            coins: Some(20),
            ..Default::default()
        })
        .unwrap();
        assert!(m.pass());
        assert_eq!(m.residuals["bc2_miss"], 2f64.powi(-20));
    }
}
