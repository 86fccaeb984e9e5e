//! Adversarial dynamic programming and Monte Carlo for the control
//! representation of G-normal expectations.
//!
//! The dynamic program runs backwards on a uniform spatial lattice with a
//! two-point (Rademacher) step of size `theta * sqrt(dt)`; at each node nature
//! picks `theta` in `{sigma_lo, sigma_hi}` to maximize (upper value) or
//! minimize (lower value) the one-step average. Off-node values are linearly
//! interpolated. The Monte Carlo side simulates a given adapted strategy
//! with Gaussian increments.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::band::VolatilityBand;
use crate::error::{config, input, Error, Result};
use crate::gheat::{gnormal_pair, SpaceTimeGrid};
use crate::parallel::{derive_seed, item_rng, mean_and_se, par_map_indexed};
use crate::payoff::{csv_name, PayoffSpec};
use crate::strategy::AdversaryStrategy;

/// Largest admissible probability that the walk reaches the lattice edge.
pub const BOUNDARY_WEIGHT_LIMIT: f64 = 1e-6;
/// Allowed distance between the n = 200 dynamic program and the PDE.
pub const DP_PDE_TOLERANCE: f64 = 2e-2;

/// Spatial lattice for the dynamic program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlLattice {
    pub half_width: f64,
    /// Number of intervals across `[-half_width, half_width]`; must be even
    /// so that the origin is a node.
    pub intervals: usize,
    pub t_end: f64,
}

impl ControlLattice {
    /// `L = 8 sigma_hi sqrt(t_end)` with 2000 intervals, `t_end = 1`.
    pub fn default_for(band: &VolatilityBand) -> Self {
        Self {
            half_width: 8.0 * band.hi(),
            intervals: 2000,
            t_end: 1.0,
        }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.intervals as f64
    }

    /// Maximal-inequality bound `2 exp(-L^2 / (2 sigma_hi^2 t))` on the
    /// probability that any path of the walk leaves the lattice.
    pub fn boundary_weight(&self, band: &VolatilityBand) -> f64 {
        let v = band.hi() * band.hi() * self.t_end;
        2.0 * (-self.half_width * self.half_width / (2.0 * v)).exp()
    }

    pub fn validate(&self, band: &VolatilityBand) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite() && self.t_end > 0.0 && self.t_end.is_finite()) {
            return config(format!("lattice needs positive finite half-width and horizon: {self:?}"));
        }
        if self.intervals < 2 || !self.intervals.is_multiple_of(2) {
            return config(format!("lattice needs an even number of intervals, got {}", self.intervals));
        }
        let w = self.boundary_weight(band);
        if w > BOUNDARY_WEIGHT_LIMIT {
            return config(format!(
                "lattice too narrow: boundary weight bound {w:.3e} exceeds {BOUNDARY_WEIGHT_LIMIT:e}"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Upper,
    Lower,
}

#[inline]
fn pick(side: Side, a: f64, b: f64) -> f64 {
    match side {
        Side::Upper => a.max(b),
        Side::Lower => a.min(b),
    }
}

struct Lattice {
    lo: f64,
    dx: f64,
    last: usize,
}

impl Lattice {
    #[inline]
    fn interp(&self, v: &[f64], x: f64) -> f64 {
        let pos = (x - self.lo) / self.dx;
        if pos <= 0.0 {
            return v[0];
        }
        if pos >= self.last as f64 {
            return v[self.last];
        }
        let j = pos as usize;
        let w = pos - j as f64;
        v[j] + w * (v[j + 1] - v[j])
    }
}

fn dp_value(payoff: &PayoffSpec, band: &VolatilityBand, n_steps: usize, lattice: &ControlLattice, side: Side) -> Result<f64> {
    if n_steps == 0 {
        return input("dynamic program needs at least one step");
    }
    lattice.validate(band)?;
    let h = (lattice.t_end / n_steps as f64).sqrt();
    let thetas: Vec<f64> = if band.is_degenerate() {
        vec![band.hi()]
    } else {
        vec![band.lo(), band.hi()]
    };
    let k = lattice.intervals;
    let dx = lattice.dx();
    let grid = Lattice {
        lo: -lattice.half_width,
        dx,
        last: k,
    };
    let xs: Vec<f64> = (0..=k).map(|j| -lattice.half_width + j as f64 * dx).collect();
    let origin = k / 2;

    let one_step = |f: &dyn Fn(f64) -> f64, x: f64| {
        let mut best = f64::NAN;
        for (t, &theta) in thetas.iter().enumerate() {
            let step = theta * h;
            let avg = 0.5 * (f(x + step) + f(x - step));
            best = if t == 0 { avg } else { pick(side, best, avg) };
        }
        best
    };

    // the final step reads the payoff directly
    let exact = |x: f64| payoff.eval(x);
    if n_steps == 1 {
        return finite(one_step(&exact, 0.0));
    }
    let mut v: Vec<f64> = xs.iter().map(|&x| one_step(&exact, x)).collect();
    let mut next = vec![0.0; k + 1];
    for _ in 1..n_steps {
        {
            let prev = &v;
            let f = |x: f64| grid.interp(prev, x);
            for (slot, &x) in next.iter_mut().zip(&xs) {
                *slot = one_step(&f, x);
            }
        }
        std::mem::swap(&mut v, &mut next);
    }
    finite(v[origin])
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Numeric("non-finite dynamic programming value".into()))
    }
}

/// Sup over bang-bang volatility choices of `E[phi(S_n)]` for the two-point
/// walk with `n_steps` steps up to `lattice.t_end`.
pub fn dp_upper_value(payoff: &PayoffSpec, band: &VolatilityBand, n_steps: usize, lattice: &ControlLattice) -> Result<f64> {
    dp_value(payoff, band, n_steps, lattice, Side::Upper)
}

/// Inf counterpart of [`dp_upper_value`]; equals `-dp_upper_value(-phi)`.
pub fn dp_lower_value(payoff: &PayoffSpec, band: &VolatilityBand, n_steps: usize, lattice: &ControlLattice) -> Result<f64> {
    dp_value(payoff, band, n_steps, lattice, Side::Lower)
}

/// Discretization error estimate `|V(n) - V(n/2)|` for the lower value.
pub fn dp_lower_error_estimate(payoff: &PayoffSpec, band: &VolatilityBand, n_steps: usize, lattice: &ControlLattice) -> Result<f64> {
    let fine = dp_lower_value(payoff, band, n_steps, lattice)?;
    let coarse = dp_lower_value(payoff, band, (n_steps / 2).max(1), lattice)?;
    Ok((fine - coarse).abs())
}

/// Monte Carlo value of one feasible strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyValue {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
}

/// Simulates `X_i = theta_i sqrt(dt) zeta_i` with standard normal `zeta`
/// under `strategy`, and averages `phi` of the terminal sum. Path `p` uses
/// the RNG derived from `(seed, p)`, so the result does not depend on the
/// worker count.
pub fn mc_strategy_value(
    payoff: &PayoffSpec,
    band: &VolatilityBand,
    strategy: &AdversaryStrategy,
    n_steps: usize,
    paths: usize,
    seed: u64,
) -> Result<StrategyValue> {
    mc_strategy_value_at(payoff, band, strategy, n_steps, 1.0, paths, seed)
}

/// [`mc_strategy_value`] with an explicit horizon `t_end`.
pub fn mc_strategy_value_at(
    payoff: &PayoffSpec,
    band: &VolatilityBand,
    strategy: &AdversaryStrategy,
    n_steps: usize,
    t_end: f64,
    paths: usize,
    seed: u64,
) -> Result<StrategyValue> {
    if n_steps == 0 || paths < 2 {
        return input("Monte Carlo needs at least one step and two paths");
    }
    // validates the strategy parameters once up front
    strategy.controller(band, n_steps)?;
    let sqrt_dt = (t_end / n_steps as f64).sqrt();
    let values: Vec<Result<f64>> = par_map_indexed(paths, |p| {
        let mut rng = item_rng(seed, p as u64);
        let mut ctrl = strategy.controller(band, n_steps)?;
        let mut sum = 0.0;
        for i in 0..n_steps {
            let theta = ctrl.checked_theta(i, sum)?;
            let z: f64 = StandardNormal.sample(&mut rng);
            sum += theta * z;
        }
        Ok(payoff.eval(sum * sqrt_dt))
    });
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let (estimate, std_error) = mean_and_se(&values);
    if !estimate.is_finite() {
        return Err(Error::Numeric("non-finite Monte Carlo estimate".into()));
    }
    Ok(StrategyValue {
        estimate,
        std_error,
        paths,
        seed,
    })
}

/// Outcome of the shift inequality `exp(-b^2 / (2 sigma_lo^2)) E_lo[phi] <= E_lo[phi(. - b)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftCheck {
    pub b: f64,
    pub factor: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks the shift inequality for a nonnegative even payoff, both sides by
/// the lower dynamic program. The tolerance is twice the larger of the two
/// `|V(n) - V(n/2)|` estimates.
pub fn shift_inequality_check(
    payoff: &PayoffSpec,
    b: f64,
    band: &VolatilityBand,
    n_steps: usize,
    lattice: &ControlLattice,
) -> Result<ShiftCheck> {
    if !b.is_finite() {
        return input("shift must be finite");
    }
    if !payoff.is_even(1e-12) {
        return input(format!("payoff `{}` is not even", payoff.name()));
    }
    if !payoff.is_nonnegative() {
        return input(format!("payoff `{}` is not nonnegative", payoff.name()));
    }
    let shifted = payoff.shifted(b);
    let base = dp_lower_value(payoff, band, n_steps, lattice)?;
    let rhs = dp_lower_value(&shifted, band, n_steps, lattice)?;
    let factor = (-b * b / (2.0 * band.lo() * band.lo())).exp();
    let lhs = factor * base;
    let tolerance = if b == 0.0 {
        0.0
    } else {
        2.0 * dp_lower_error_estimate(payoff, band, n_steps, lattice)?
            .max(dp_lower_error_estimate(&shifted, band, n_steps, lattice)?)
    };
    Ok(ShiftCheck {
        b,
        factor,
        lhs,
        rhs,
        tolerance,
        pass: lhs <= rhs + tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub dp_upper: f64,
    pub pde_value: f64,
    pub gap: f64,
}

/// Gap between the n-step upper dynamic program and the PDE value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub payoff: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Gaps are nonincreasing up to `noise`, considering rows with `n >= from_n`.
    pub fn weakly_decreasing(&self, noise: f64, from_n: usize) -> bool {
        let gaps: Vec<f64> = self.rows.iter().filter(|r| r.n >= from_n).map(|r| r.gap).collect();
        gaps.windows(2).all(|w| w[1] <= w[0] + noise)
    }

    pub fn final_gap(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.gap)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,dp_upper,pde_value,gap\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.n, r.dp_upper, r.pde_value, r.gap));
        }
        out
    }
}

/// Upper dynamic program for each `n` against the PDE upper value at `t_end`.
pub fn clt_convergence(
    payoff: &PayoffSpec,
    band: &VolatilityBand,
    n_list: &[usize],
    lattice: &ControlLattice,
) -> Result<ConvergenceTable> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return input("n list must be nonempty and strictly increasing");
    }
    let pde = gnormal_pair(payoff, band, &SpaceTimeGrid::default_for(band, lattice.t_end))?.upper;
    let rows = n_list
        .iter()
        .map(|&n| {
            let dp = dp_upper_value(payoff, band, n, lattice)?;
            Ok(ConvergenceRow {
                n,
                dp_upper: dp,
                pde_value: pde,
                gap: (dp - pde).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable {
        payoff: payoff.name().to_string(),
        rows,
    })
}

/// One strategy/payoff cell of the sandwich experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub payoff: String,
    pub strategy: String,
    pub mc: StrategyValue,
    pub dp_lower: f64,
    pub dp_upper: f64,
    pub pde_lower: f64,
    pub pde_upper: f64,
    /// `mc` lies in `[dp_lower - 3 SE - tol, dp_upper + 3 SE + tol]`.
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    /// Largest `|dp - pde|` over payoffs and both sides.
    pub max_dp_pde_gap: f64,
}

impl SandwichReport {
    pub fn all_inside(&self) -> bool {
        self.rows.iter().all(|r| r.inside)
    }

    pub fn dp_matches_pde(&self) -> bool {
        self.max_dp_pde_gap <= DP_PDE_TOLERANCE
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("payoff,strategy,mc_estimate,mc_std_error,paths,seed,dp_lower,dp_upper,pde_lower,pde_upper,inside\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                csv_name(&r.payoff), r.strategy, r.mc.estimate, r.mc.std_error, r.mc.paths, r.mc.seed,
                r.dp_lower, r.dp_upper, r.pde_lower, r.pde_upper, r.inside
            ));
        }
        out
    }
}

/// Settings for [`sandwich_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichSettings {
    pub mc_steps: usize,
    pub paths: usize,
    pub dp_steps: usize,
    pub master_seed: u64,
}

/// Every strategy's Monte Carlo value against the dynamic-programming
/// bounds, for each payoff.
pub fn sandwich_check(
    payoffs: &[PayoffSpec],
    strategies: &[AdversaryStrategy],
    band: &VolatilityBand,
    lattice: &ControlLattice,
    settings: &SandwichSettings,
) -> Result<SandwichReport> {
    let grid = SpaceTimeGrid::default_for(band, lattice.t_end);
    let mut rows = Vec::new();
    let mut max_gap: f64 = 0.0;
    for (pi, payoff) in payoffs.iter().enumerate() {
        let dp_upper = dp_upper_value(payoff, band, settings.dp_steps, lattice)?;
        let dp_lower = dp_lower_value(payoff, band, settings.dp_steps, lattice)?;
        let pde = gnormal_pair(payoff, band, &grid)?;
        max_gap = max_gap.max((dp_upper - pde.upper).abs()).max((dp_lower - pde.lower).abs());
        for (si, strategy) in strategies.iter().enumerate() {
            let seed = derive_seed(settings.master_seed, (pi * strategies.len() + si) as u64);
            let mc = mc_strategy_value_at(payoff, band, strategy, settings.mc_steps, lattice.t_end, settings.paths, seed)?;
            let slack = 3.0 * mc.std_error + DP_PDE_TOLERANCE;
            let inside = mc.estimate >= dp_lower - slack && mc.estimate <= dp_upper + slack;
            rows.push(SandwichRow {
                payoff: payoff.name().to_string(),
                strategy: strategy.label(),
                mc,
                dp_lower,
                dp_upper,
                pde_lower: pde.lower,
                pde_upper: pde.upper,
                inside,
            });
        }
    }
    Ok(SandwichReport {
        rows,
        max_dp_pde_gap: max_gap,
    })
}
