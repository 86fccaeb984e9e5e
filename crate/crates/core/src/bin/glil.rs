use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glil::error::{Error, Result};
use glil::experiment::{run, Command, ExperimentConfig, OutputFormat};
use glil::parallel::pool_from_env;

#[derive(Parser)]
#[command(name = "glil", version, about = "G-expectation solvers and LIL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// G-normal expectation pair by the G-heat equation.
    Solve(Common),
    /// Control-representation checks: sandwich, convergence, shift inequality.
    Dual {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        clt: bool,
        #[arg(long)]
        lemma5: bool,
        #[arg(long)]
        sandwich: bool,
    },
    /// LIL experiments: tail extremes, cluster targets, moment ratios.
    Lil {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        theorem1: bool,
        #[arg(long)]
        cluster: bool,
        #[arg(long)]
        moments: bool,
        /// Moment order.
        #[arg(long)]
        r: Option<f64>,
        /// Block offsets for the moment table.
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<usize>>,
        /// Block growth ratio for the cluster adversary.
        #[arg(long)]
        growth: Option<f64>,
    },
    /// Axiom, duality and Borel-Cantelli checks on finite models.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axioms: bool,
        #[arg(long)]
        duality: bool,
        #[arg(long)]
        bc2: bool,
        #[arg(long)]
        random_models: Option<usize>,
        /// Lower success probability of each coin.
        #[arg(long)]
        p: Option<f64>,
        /// Upper success probability of each coin.
        #[arg(long)]
        p_hi: Option<f64>,
        /// Number of coins.
        #[arg(long = "M")]
        coins: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Volatility band `LO,HI`.
    #[arg(long)]
    band: Option<String>,
    /// Payoff name, `@file`, or a comma-separated list.
    #[arg(long)]
    payoff: Option<String>,
    /// PDE grid `L,dx,dt`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Trajectory horizon; accepts `1e6`.
    #[arg(long = "N", value_parser = parse_count)]
    horizon: Option<usize>,
    #[arg(long)]
    strategies: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    b: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
}

fn parse_count(s: &str) -> std::result::Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e15 => Ok(v as usize),
        _ => Err(format!("`{s}` is not a count")),
    }
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn some(flag: bool) -> Option<bool> {
    flag.then_some(true)
}

impl Common {
    fn into_config(self) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        Ok(base.overlay(ExperimentConfig {
            band: self.band,
            payoff: self.payoff,
            grid: self.grid,
            t_end: self.t_end,
            n: self.n,
            horizon: self.horizon,
            strategies: self.strategies,
            b: self.b,
            seeds: self.seeds,
            master_seed: self.master_seed,
            out: self.out,
            format: self.format,
            paths: self.paths,
            steps: self.steps,
            ..Default::default()
        }))
    }
}

fn resolve(cmd: Cmd) -> Result<(Command, ExperimentConfig)> {
    Ok(match cmd {
        Cmd::Solve(common) => (Command::Solve, common.into_config()?),
        Cmd::Dual { common, clt, lemma5, sandwich } => {
            let cfg = common.into_config()?.overlay(ExperimentConfig {
                clt: some(clt),
                lemma5: some(lemma5),
                sandwich: some(sandwich),
                ..Default::default()
            });
            (Command::Dual, cfg)
        }
        Cmd::Lil { common, theorem1, cluster, moments, r, m, growth } => {
            let cfg = common.into_config()?.overlay(ExperimentConfig {
                theorem1: some(theorem1),
                cluster: some(cluster),
                moments: some(moments),
                r,
                m,
                growth,
                ..Default::default()
            });
            (Command::Lil, cfg)
        }
        Cmd::Capacity { common, axioms, duality, bc2, random_models, p, p_hi, coins } => {
            let cfg = common.into_config()?.overlay(ExperimentConfig {
                axioms: some(axioms),
                duality: some(duality),
                bc2: some(bc2),
                random_models,
                p,
                p_hi,
                coins,
                ..Default::default()
            });
            (Command::Capacity, cfg)
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = resolve(cli.command).and_then(|(command, cfg)| pool_from_env().install(|| run(command, &cfg)));
    match outcome {
        Ok(manifest) => {
            for line in &manifest.summary {
                println!("{line}");
            }
            for v in &manifest.verdicts {
                println!("{}", v.line());
            }
            ExitCode::from(manifest.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
