//! Finite-horizon surrogates for the law of the iterated logarithm under
//! volatility uncertainty.
//!
//! A trajectory is `X_i = theta_i zeta_i` where `theta_i` comes from an
//! adapted [`AdversaryStrategy`] and `zeta_i` is fair Rademacher noise (or
//! truncated Gaussian noise on request). Partial sums are kept at
//! geometrically thinned checkpoints; the tail extremes of
//! `R_n = S_n / sqrt(2 n ln ln n)` are tracked exactly at every step.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::band::VolatilityBand;
use crate::error::{input, Error, Result};
use crate::parallel::{item_rng, mean_and_se, par_map_indexed};
use crate::schedule::BlockSchedule;
use crate::strategy::{lil_normalizer, AdversaryStrategy};
use crate::verdict::Verdict;

/// Spacing ratio of stored checkpoints.
pub const CHECKPOINT_RATIO: f64 = 1.01;
/// Width of cluster histogram bins.
pub const BIN_WIDTH: f64 = 0.05;
/// Truncation of Gaussian noise, in standard deviations.
pub const GAUSSIAN_TRUNCATION: f64 = 6.0;

/// `S / sqrt(2 n ln ln n)` for `n >= 3`.
pub fn lil_statistic(s: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return input(format!("LIL statistic needs n >= 3, got {n}"));
    }
    Ok(s / lil_normalizer(n))
}

/// First index of the tail window `[N^(7/8), N]`.
pub fn tail_window_start(horizon: usize) -> usize {
    ((horizon as f64).powf(0.875).ceil() as usize).clamp(3, horizon.max(3))
}

/// First index included in the cluster histogram, `N^(1/2)`.
pub fn histogram_start(horizon: usize) -> usize {
    ((horizon as f64).sqrt().ceil() as usize).clamp(3, horizon.max(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    #[default]
    Rademacher,
    /// Standard normal, resampled outside `±6`.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    pub noise: Noise,
    /// Flip the sign of every noise draw.
    pub antithetic: bool,
    /// Block boundaries added to the checkpoints.
    pub schedule: Option<BlockSchedule>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            noise: Noise::Rademacher,
            antithetic: false,
            schedule: None,
        }
    }
}

struct NoiseSource {
    kind: Noise,
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl NoiseSource {
    fn new(kind: Noise, rng: ChaCha8Rng) -> Self {
        Self {
            kind,
            rng,
            bits: 0,
            left: 0,
        }
    }

    #[inline]
    fn next(&mut self) -> f64 {
        match self.kind {
            Noise::Rademacher => {
                if self.left == 0 {
                    self.bits = self.rng.next_u64();
                    self.left = 64;
                }
                let b = self.bits & 1;
                self.bits >>= 1;
                self.left -= 1;
                if b == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
            Noise::Gaussian => loop {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                if z.abs() <= GAUSSIAN_TRUNCATION {
                    break z;
                }
            },
        }
    }
}

/// Partial sums at checkpoints plus exact tail-window extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LILTrajectory {
    pub strategy: String,
    pub horizon: usize,
    pub seed: u64,
    pub checkpoints: Vec<usize>,
    pub sums: Vec<f64>,
    /// `sup R_n` over every `n` in the tail window.
    pub tail_sup: f64,
    /// `inf R_n` over every `n` in the tail window.
    pub tail_inf: f64,
    pub max_abs_increment: f64,
}

impl LILTrajectory {
    /// `R_n` at each checkpoint; `None` below `n = 3`.
    pub fn statistics(&self) -> Vec<Option<f64>> {
        self.checkpoints
            .iter()
            .zip(&self.sums)
            .map(|(&n, &s)| lil_statistic(s, n).ok())
            .collect()
    }

    /// Partial sum at checkpoint `n`, if stored.
    pub fn sum_at(&self, n: usize) -> Option<f64> {
        if n == 0 {
            return Some(0.0);
        }
        self.checkpoints.binary_search(&n).ok().map(|j| self.sums[j])
    }

    pub fn final_statistic(&self) -> f64 {
        self.sums.last().map_or(f64::NAN, |&s| s / lil_normalizer(self.horizon))
    }

    /// CSV with header `n,S_n,R_n`; `R_n` is empty below `n = 3`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,S_n,R_n\n");
        for (j, r) in self.statistics().into_iter().enumerate() {
            let r = r.map_or(String::new(), |r| r.to_string());
            out.push_str(&format!("{},{},{}\n", self.checkpoints[j], self.sums[j], r));
        }
        out
    }
}

fn checkpoint_indices(horizon: usize, schedule: Option<&BlockSchedule>) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut n = 3usize;
    while n <= horizon {
        out.push(n);
        n = (n + 1).max((CHECKPOINT_RATIO * n as f64).ceil() as usize);
    }
    if let Some(s) = schedule {
        out.extend(s.boundaries(horizon)?);
    }
    out.push(horizon);
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// [`sample_trajectory_with`] with Rademacher noise and no block schedule.
pub fn sample_trajectory(strategy: &AdversaryStrategy, band: &VolatilityBand, horizon: usize, seed: u64) -> Result<LILTrajectory> {
    sample_trajectory_with(strategy, band, horizon, seed, &TrajectoryOptions::default())
}

/// Streams `horizon` steps. The noise depends on `seed` only, so different
/// strategies run on the same seed share their noise sequence.
pub fn sample_trajectory_with(
    strategy: &AdversaryStrategy,
    band: &VolatilityBand,
    horizon: usize,
    seed: u64,
    options: &TrajectoryOptions,
) -> Result<LILTrajectory> {
    if horizon < 3 {
        return input(format!("trajectory horizon must be at least 3, got {horizon}"));
    }
    let checkpoints = checkpoint_indices(horizon, options.schedule.as_ref())?;
    let mut ctrl = strategy.controller(band, horizon)?;
    let mut noise = NoiseSource::new(options.noise, item_rng(seed, 0));
    let sign = if options.antithetic { -1.0 } else { 1.0 };
    let window = tail_window_start(horizon);

    let mut sums = Vec::with_capacity(checkpoints.len());
    let mut next = 0usize;
    let mut sum = 0.0f64;
    let mut tail_sup = f64::NEG_INFINITY;
    let mut tail_inf = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    for i in 0..horizon {
        let theta = ctrl.checked_theta(i, sum)?;
        let x = theta * sign * noise.next();
        max_abs = max_abs.max(x.abs());
        sum += x;
        let n = i + 1;
        if n >= window {
            let r = sum / lil_normalizer(n);
            tail_sup = tail_sup.max(r);
            tail_inf = tail_inf.min(r);
        }
        if checkpoints[next] == n {
            sums.push(sum);
            next += 1;
        }
    }
    if !sum.is_finite() {
        return Err(Error::Numeric("non-finite partial sum".into()));
    }
    Ok(LILTrajectory {
        strategy: strategy.label(),
        horizon,
        seed,
        checkpoints,
        sums,
        tail_sup,
        tail_inf,
        max_abs_increment: max_abs,
    })
}

/// Visit counts of `R_n` over checkpoints with `n >= sqrt(N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterHistogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl ClusterHistogram {
    pub fn new(band: &VolatilityBand) -> Self {
        let lo = -band.hi() - 0.5;
        let bins = ((2.0 * band.hi() + 1.0) / BIN_WIDTH).round() as usize;
        Self {
            lo,
            width: BIN_WIDTH,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.width * self.counts.len() as f64
    }

    pub fn add(&mut self, r: f64) {
        if r < self.lo {
            self.underflow += 1;
        } else if r >= self.hi() {
            self.overflow += 1;
        } else {
            let j = (((r - self.lo) / self.width) as usize).min(self.counts.len() - 1);
            self.counts[j] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Share of visits outside `[a, b]`, counting a bin as inside when its
    /// centre is.
    pub fn mass_outside(&self, a: f64, b: f64) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let mut outside = self.underflow + self.overflow;
        for (j, &c) in self.counts.iter().enumerate() {
            let mid = self.lo + (j as f64 + 0.5) * self.width;
            if mid < a || mid > b {
                outside += c;
            }
        }
        outside as f64 / total as f64
    }

    pub fn merge(&mut self, other: &ClusterHistogram) {
        debug_assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LILReport {
    pub strategy: String,
    pub seed: u64,
    pub horizon: usize,
    pub tail_window: (usize, usize),
    pub tail_sup: f64,
    pub tail_inf: f64,
    pub final_statistic: f64,
    pub histogram: ClusterHistogram,
}

impl LILReport {
    pub fn from_trajectory(traj: &LILTrajectory, band: &VolatilityBand) -> Self {
        let mut histogram = ClusterHistogram::new(band);
        let start = histogram_start(traj.horizon);
        for (&n, &s) in traj.checkpoints.iter().zip(&traj.sums) {
            if n >= start {
                histogram.add(s / lil_normalizer(n));
            }
        }
        Self {
            strategy: traj.strategy.clone(),
            seed: traj.seed,
            horizon: traj.horizon,
            tail_window: (tail_window_start(traj.horizon), traj.horizon),
            tail_sup: traj.tail_sup,
            tail_inf: traj.tail_inf,
            final_statistic: traj.final_statistic(),
            histogram,
        }
    }
}

/// Relative slack on the outer bounds `±sigma_hi`.
pub const OUTER_SLACK: f64 = 0.15;
/// Band for a constant-`sigma` strategy's aggregated tail extreme, as a
/// multiple of `sigma`.
pub const CONSTANT_BAND: (f64, f64) = (0.70, 1.10);
/// Relative slack on the inner bound `sigma_lo` for the constant-`sigma_hi` run.
pub const INNER_SLACK: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Result {
    pub band: VolatilityBand,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub reports: Vec<LILReport>,
    pub verdicts: Vec<Verdict>,
}

impl Theorem1Result {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Minimum horizon accepted by [`theorem1_experiment`].
pub const MIN_THEOREM1_HORIZON: usize = 100_000;

/// Runs every strategy on every seed and checks the limsup/liminf bands.
///
/// For a constant strategy the tail extremes are aggregated over seeds
/// (max of `tail_sup`, min of `tail_inf`) before comparing with the band.
pub fn theorem1_experiment(
    band: &VolatilityBand,
    strategies: &[AdversaryStrategy],
    horizon: usize,
    seeds: &[u64],
) -> Result<(Theorem1Result, Vec<LILTrajectory>)> {
    if horizon < MIN_THEOREM1_HORIZON {
        return input(format!("experiment horizon must be at least {MIN_THEOREM1_HORIZON}, got {horizon}"));
    }
    if seeds.len() < 3 {
        return input(format!("experiment needs at least 3 seeds, got {}", seeds.len()));
    }
    if strategies.is_empty() {
        return input("experiment needs at least one strategy");
    }
    for s in strategies {
        s.controller(band, horizon)?;
    }
    let runs = par_map_indexed(strategies.len() * seeds.len(), |j| {
        let strategy = &strategies[j / seeds.len()];
        sample_trajectory(strategy, band, horizon, seeds[j % seeds.len()])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let reports: Vec<LILReport> = runs.iter().map(|t| LILReport::from_trajectory(t, band)).collect();

    let (lo, hi) = (band.lo(), band.hi());
    let mut verdicts = vec![
        Verdict::within(
            "limsup upper bound: max tail_sup",
            reports.iter().map(|r| r.tail_sup).fold(f64::NEG_INFINITY, f64::max),
            f64::NEG_INFINITY,
            hi * (1.0 + OUTER_SLACK),
        ),
        Verdict::within(
            "liminf lower bound: min tail_inf",
            reports.iter().map(|r| r.tail_inf).fold(f64::INFINITY, f64::min),
            -hi * (1.0 + OUTER_SLACK),
            f64::INFINITY,
        ),
    ];
    for (si, strategy) in strategies.iter().enumerate() {
        let AdversaryStrategy::Constant { sigma } = strategy else {
            continue;
        };
        let own = &reports[si * seeds.len()..(si + 1) * seeds.len()];
        let sup = own.iter().map(|r| r.tail_sup).fold(f64::NEG_INFINITY, f64::max);
        let inf = own.iter().map(|r| r.tail_inf).fold(f64::INFINITY, f64::min);
        let label = strategy.label();
        verdicts.push(Verdict::within(
            format!("{label} tail_sup"),
            sup,
            CONSTANT_BAND.0 * sigma,
            CONSTANT_BAND.1 * sigma,
        ));
        verdicts.push(Verdict::within(
            format!("{label} tail_inf"),
            inf,
            -CONSTANT_BAND.1 * sigma,
            -CONSTANT_BAND.0 * sigma,
        ));
        if (*sigma - hi).abs() <= 1e-12 * hi {
            verdicts.push(Verdict::within(
                format!("{label} tail_sup reaches sigma_lo"),
                sup,
                lo * (1.0 - INNER_SLACK),
                f64::INFINITY,
            ));
            verdicts.push(Verdict::within(
                format!("{label} tail_inf reaches -sigma_lo"),
                inf,
                f64::NEG_INFINITY,
                -lo * (1.0 - INNER_SLACK),
            ));
        }
    }
    let result = Theorem1Result {
        band: *band,
        horizon,
        seeds: seeds.to_vec(),
        reports,
        verdicts,
    };
    Ok((result, runs))
}

/// Block increment `(S_{n_{k+1}} - S_{n_k}) / sqrt(2 n_{k+1} ln ln n_{k+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockIncrement {
    pub k: usize,
    pub n_start: usize,
    pub n_end: usize,
    pub statistic: f64,
    /// `n_start / n_end`.
    pub ratio: f64,
}

/// Increment statistics over consecutive schedule boundaries. Boundaries
/// beyond the horizon are dropped (with a warning for the finite `k^k`
/// schedule); every remaining boundary must be a stored checkpoint.
pub fn block_increment_stats(trajectory: &LILTrajectory, schedule: &BlockSchedule) -> Result<Vec<BlockIncrement>> {
    let bounds = schedule.boundaries(trajectory.horizon)?;
    if let BlockSchedule::KPowK { k_max } = schedule {
        if bounds.len() < *k_max as usize {
            log::warn!(
                "k^k schedule trimmed from {k_max} to {} boundaries at horizon {}",
                bounds.len(),
                trajectory.horizon
            );
        }
    }
    let mut out = Vec::new();
    for (k, w) in bounds.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let (sa, sb) = match (trajectory.sum_at(a), trajectory.sum_at(b)) {
            (Some(sa), Some(sb)) => (sa, sb),
            _ => return input(format!("trajectory has no checkpoint at block boundary {a} or {b}")),
        };
        out.push(BlockIncrement {
            k: k + 1,
            n_start: a,
            n_end: b,
            statistic: (sb - sa) / lil_normalizer(b),
            ratio: a as f64 / b as f64,
        });
    }
    Ok(out)
}

/// Per-`(b, seed)` result of the cluster experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub b: f64,
    pub seed: u64,
    /// `min |R_{n_k} - b|` over all block ends.
    pub min_distance: f64,
    pub closest_block_end: usize,
    /// The same minimum restricted to block ends `n_k >= sqrt(N)`.
    pub tail_min_distance: f64,
    /// Share of blocks starting at `n_k >= sqrt(N)` whose increment
    /// statistic is within `epsilon` of `b`.
    pub hit_fraction: f64,
    pub blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub band: VolatilityBand,
    pub horizon: usize,
    pub growth: f64,
    pub epsilon: f64,
    pub rows: Vec<ClusterRow>,
    pub verdicts: Vec<Verdict>,
}

impl ClusterReport {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("b,seed,min_distance,closest_block_end,tail_min_distance,hit_fraction,blocks\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.b, r.seed, r.min_distance, r.closest_block_end, r.tail_min_distance, r.hit_fraction, r.blocks
            ));
        }
        out
    }
}

/// Distance threshold of the cluster verdict.
pub const CLUSTER_EPSILON: f64 = 0.1;

/// Runs the block-targeting adversary for each `b` in the open interval
/// `(-sigma_lo, sigma_lo)` and records how close `R_{n_k}` gets to `b`.
pub fn cluster_experiment(
    band: &VolatilityBand,
    b_list: &[f64],
    horizon: usize,
    seeds: &[u64],
    growth: f64,
) -> Result<(ClusterReport, Vec<LILTrajectory>)> {
    if let Some(&b) = b_list.iter().find(|b| b.is_nan() || b.abs() >= band.lo()) {
        return input(format!("cluster target {b} is outside (-sigma_lo, sigma_lo) = (-{0}, {0})", band.lo()));
    }
    if b_list.is_empty() || seeds.is_empty() {
        return input("cluster experiment needs targets and seeds");
    }
    if horizon < 3 {
        return input(format!("horizon must be at least 3, got {horizon}"));
    }
    let schedule = BlockSchedule::Geometric { ratio: growth };
    schedule.validate()?;
    let options = TrajectoryOptions {
        schedule: Some(schedule),
        ..TrajectoryOptions::default()
    };
    let runs = par_map_indexed(b_list.len() * seeds.len(), |j| {
        let b = b_list[j / seeds.len()];
        let strategy = AdversaryStrategy::BlockTarget { target: b, growth };
        sample_trajectory_with(&strategy, band, horizon, seeds[j % seeds.len()], &options)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let start = histogram_start(horizon);
    let mut ends = schedule.boundaries(horizon)?;
    if ends.last() != Some(&horizon) {
        ends.push(horizon);
    }
    let mut rows = Vec::new();
    for (j, traj) in runs.iter().enumerate() {
        let b = b_list[j / seeds.len()];
        let mut best = (f64::INFINITY, 0usize);
        let mut tail_best = f64::INFINITY;
        for &n in &ends {
            let r = traj.sum_at(n).expect("block end is a checkpoint") / lil_normalizer(n);
            let d = (r - b).abs();
            if d < best.0 {
                best = (d, n);
            }
            if n >= start {
                tail_best = tail_best.min(d);
            }
        }
        let incs = block_increment_stats(traj, &schedule)?;
        let counted: Vec<_> = incs.iter().filter(|i| i.n_start >= start).collect();
        let hits = counted.iter().filter(|i| (i.statistic - b).abs() <= CLUSTER_EPSILON).count();
        rows.push(ClusterRow {
            b,
            seed: traj.seed,
            min_distance: best.0,
            closest_block_end: best.1,
            tail_min_distance: tail_best,
            hit_fraction: if counted.is_empty() { 0.0 } else { hits as f64 / counted.len() as f64 },
            blocks: counted.len(),
        });
    }
    let verdicts = b_list
        .iter()
        .map(|&b| {
            let worst = rows
                .iter()
                .filter(|r| r.b == b)
                .map(|r| r.min_distance)
                .fold(f64::NEG_INFINITY, f64::max);
            Verdict::within(format!("b = {b}: worst min distance over seeds"), worst, 0.0, CLUSTER_EPSILON)
        })
        .collect();
    Ok((
        ClusterReport {
            band: *band,
            horizon,
            growth,
            epsilon: CLUSTER_EPSILON,
            rows,
            verdicts,
        },
        runs,
    ))
}

/// `E|Z|^r` for standard normal `Z`.
pub fn gaussian_abs_moment(r: f64) -> f64 {
    2f64.powf(r / 2.0) * gamma((r + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub m: usize,
    pub n: usize,
    /// Estimate of `E[max_{i <= n} |S_{m,i}|^r] / n^(r/2)`.
    pub ratio: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub r: f64,
    pub strategy: String,
    pub paths: usize,
    pub seed: u64,
    pub rows: Vec<MomentRow>,
    /// `sigma_hi^r E|Z|^r`.
    pub classical_constant: f64,
    pub verdicts: Vec<Verdict>,
}

impl MomentTable {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,ratio,std_error\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.m, r.n, r.ratio, r.std_error));
        }
        out
    }
}

/// Largest admitted `last / first` ratio along `n`.
pub const MOMENT_TREND_LIMIT: f64 = 1.5;
/// Multiple of the classical constant allowed for any table entry.
pub const MOMENT_BOUND_FACTOR: f64 = 2.0;

/// Monte Carlo estimates of the scaled maximal moment of block sums
/// `S_{m,i} = X_{m+1} + ... + X_{m+i}`. One path of length
/// `max(m) + max(n)` serves every `(m, n)` cell.
pub fn moment_ratio_check(
    band: &VolatilityBand,
    strategy: &AdversaryStrategy,
    r: f64,
    n_list: &[usize],
    m_list: &[usize],
    paths: usize,
    seed: u64,
) -> Result<MomentTable> {
    if !(r > 2.0 && r.is_finite()) {
        return input(format!("moment order must exceed 2, got {r}"));
    }
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return input("n list must be positive and strictly increasing");
    }
    if m_list.is_empty() || paths < 2 {
        return input("moment check needs offsets and at least two paths");
    }
    let n_max = *n_list.last().unwrap();
    let m_max = *m_list.iter().max().unwrap();
    let total = m_max + n_max;
    strategy.controller(band, total)?;

    let cells = m_list.len() * n_list.len();
    let per_path: Vec<Result<Vec<f64>>> = par_map_indexed(paths, |p| {
        let mut ctrl = strategy.controller(band, total)?;
        let mut noise = NoiseSource::new(Noise::Rademacher, item_rng(seed, p as u64));
        let mut base = vec![0.0; m_list.len()];
        let mut running = vec![0.0f64; m_list.len()];
        let mut next = vec![0usize; m_list.len()];
        let mut out = vec![0.0; cells];
        let mut s = 0.0;
        for step in 0..total {
            s += ctrl.checked_theta(step, s)? * noise.next();
            let j = step + 1;
            for (mi, &m) in m_list.iter().enumerate() {
                if j == m {
                    base[mi] = s;
                } else if j > m && next[mi] < n_list.len() {
                    let i = j - m;
                    running[mi] = running[mi].max((s - base[mi]).abs());
                    if i == n_list[next[mi]] {
                        out[mi * n_list.len() + next[mi]] = running[mi].powf(r);
                        next[mi] += 1;
                    }
                }
            }
        }
        Ok(out)
    });
    let per_path = per_path.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(cells);
    for (mi, &m) in m_list.iter().enumerate() {
        for (ni, &n) in n_list.iter().enumerate() {
            let col: Vec<f64> = per_path.iter().map(|v| v[mi * n_list.len() + ni]).collect();
            let (mean, se) = mean_and_se(&col);
            let scale = (n as f64).powf(r / 2.0);
            rows.push(MomentRow {
                m,
                n,
                ratio: mean / scale,
                std_error: se / scale,
            });
        }
    }
    let classical_constant = band.hi().powf(r) * gaussian_abs_moment(r);
    let max_ratio = rows.iter().map(|x| x.ratio).fold(f64::NEG_INFINITY, f64::max);
    let mut verdicts = vec![Verdict::within(
        "max ratio within twice the classical constant",
        max_ratio,
        0.0,
        MOMENT_BOUND_FACTOR * classical_constant,
    )];
    for (mi, &m) in m_list.iter().enumerate() {
        let first = rows[mi * n_list.len()].ratio;
        let last = rows[mi * n_list.len() + n_list.len() - 1].ratio;
        verdicts.push(Verdict::within(
            format!("m = {m}: last/first ratio"),
            last / first,
            0.0,
            MOMENT_TREND_LIMIT,
        ));
    }
    Ok(MomentTable {
        r,
        strategy: strategy.label(),
        paths,
        seed,
        rows,
        classical_constant,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> VolatilityBand {
        VolatilityBand::new(0.5, 1.0).unwrap()
    }

    #[test]
    fn statistic_examples() {
        assert_eq!(lil_statistic(0.0, 1000).unwrap(), 0.0);
        assert!((lil_statistic(30.0, 100).unwrap() - 1.716_568_727_018_883).abs() < 1e-12);
        let s = (6.0 * 3f64.ln().ln()).sqrt();
        assert!((lil_statistic(s, 3).unwrap() - 1.0).abs() < 1e-14);
        assert!(lil_statistic(1.0, 2).is_err());
    }

    #[test]
    fn trajectory_is_bounded_and_deterministic() {
        let b = band();
        for s in AdversaryStrategy::parse_list("const:1,feedback:0.2,block:0.3,random:2", 5).unwrap() {
            let t = sample_trajectory(&s, &b, 20_000, 11).unwrap();
            assert!(t.max_abs_increment <= b.hi());
            assert_eq!(t, sample_trajectory(&s, &b, 20_000, 11).unwrap());
            assert_eq!(*t.checkpoints.last().unwrap(), 20_000);
            assert!(t.tail_inf <= t.tail_sup);
            assert!(t.tail_sup >= t.final_statistic());
        }
        assert!(sample_trajectory(&AdversaryStrategy::Constant { sigma: 1.0 }, &b, 2, 0).is_err());
    }

    #[test]
    fn antithetic_noise_negates_constant_paths() {
        let b = band();
        let s = AdversaryStrategy::Constant { sigma: 0.75 };
        let t = sample_trajectory(&s, &b, 50_000, 4).unwrap();
        let opts = TrajectoryOptions {
            antithetic: true,
            ..Default::default()
        };
        let f = sample_trajectory_with(&s, &b, 50_000, 4, &opts).unwrap();
        assert!(t.sums.iter().zip(&f.sums).all(|(a, b)| *a == -*b));
        assert_eq!(f.tail_sup, -t.tail_inf);
    }

    #[test]
    fn histogram_mass_matches_checkpoints() {
        let b = band();
        let t = sample_trajectory(&AdversaryStrategy::Constant { sigma: 1.0 }, &b, 100_000, 1).unwrap();
        let rep = LILReport::from_trajectory(&t, &b);
        let expected = t.checkpoints.iter().filter(|&&n| n >= histogram_start(100_000)).count() as u64;
        assert_eq!(rep.histogram.total(), expected);
        assert_eq!(rep.histogram.counts.len(), 60);
    }

    #[test]
    fn zero_path_has_zero_increments() {
        let schedule = BlockSchedule::KPowK { k_max: 8 };
        let checkpoints = schedule.boundaries(50_000).unwrap();
        let traj = LILTrajectory {
            strategy: "zero".into(),
            horizon: 50_000,
            seed: 0,
            sums: vec![0.0; checkpoints.len()],
            checkpoints,
            tail_sup: 0.0,
            tail_inf: 0.0,
            max_abs_increment: 0.0,
        };
        let incs = block_increment_stats(&traj, &schedule).unwrap();
        assert_eq!(incs.len(), 5);
        assert!(incs.iter().all(|i| i.statistic == 0.0));
        assert!((incs[4].ratio - 3125.0 / 46656.0).abs() < 1e-15);
    }

    #[test]
    fn cluster_rejects_targets_outside_inner_band() {
        let b = band();
        for t in [0.5, -0.5, 0.7] {
            assert!(matches!(cluster_experiment(&b, &[t], 10_000, &[1], 1.5), Err(Error::InvalidInput(_))));
        }
    }

    #[test]
    fn gaussian_abs_moments() {
        assert!((gaussian_abs_moment(4.0) - 3.0).abs() < 1e-12);
        assert!((gaussian_abs_moment(2.0) - 1.0).abs() < 1e-12);
        assert!((gaussian_abs_moment(3.0) - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn moment_check_rejects_low_order() {
        let b = band();
        let s = AdversaryStrategy::Constant { sigma: 1.0 };
        assert!(moment_ratio_check(&b, &s, 2.0, &[10], &[0], 10, 0).is_err());
    }
}
