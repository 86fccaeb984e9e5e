//! Explicit monotone finite differences for the G-heat equation
//! `u_t = G(u_xx)`, `u(0, x) = phi(x)`.
//!
//! Forward Euler in time, central second differences in space. Under
//! `dt <= dx^2 / sigma_hi^2` every update is a convex combination of the
//! three neighbouring values, so the scheme is monotone and stays inside
//! the range of the initial data. Edge rows are held fixed (zero second
//! difference).

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::band::VolatilityBand;
use crate::error::{config, Error, Result};
use crate::payoff::PayoffSpec;
use crate::sublinear::ExpectationPair;

/// Spatial half-width, space step, time step and terminal time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub half_width: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl SpaceTimeGrid {
    /// `L = 8 sigma_hi sqrt(t)`, `dx = L / 400`, `dt = 0.9 dx^2 / sigma_hi^2`.
    pub fn default_for(band: &VolatilityBand, t_end: f64) -> Self {
        let half_width = 8.0 * band.hi() * t_end.sqrt();
        let dx = half_width / 400.0;
        let dt = 0.9 * dx * dx / (band.hi() * band.hi());
        Self {
            half_width,
            dx,
            dt,
            t_end,
        }
    }

    /// Number of spatial intervals, `2L / dx`.
    pub fn intervals(&self) -> usize {
        (2.0 * self.half_width / self.dx).round() as usize
    }

    pub fn validate(&self, band: &VolatilityBand) -> Result<()> {
        let vals = [self.half_width, self.dx, self.dt, self.t_end];
        if vals.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return config(format!("grid parameters must be positive and finite: {self:?}"));
        }
        let cfl = self.dx * self.dx / (band.hi() * band.hi());
        if self.dt > cfl * (1.0 + 1e-12) {
            return config(format!(
                "CFL violated: dt = {} exceeds dx^2/sigma_hi^2 = {cfl}",
                self.dt
            ));
        }
        let min_width = 6.0 * band.hi() * self.t_end.sqrt();
        if self.half_width < min_width * (1.0 - 1e-12) {
            return config(format!(
                "half-width {} below 6 sigma_hi sqrt(t_end) = {min_width}",
                self.half_width
            ));
        }
        let ratio = 2.0 * self.half_width / self.dx;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) || ratio.round() < 2.0 {
            return config(format!("2L/dx = {ratio} must be an integer >= 2"));
        }
        Ok(())
    }
}

/// Value function `u(t_end, .)` on the spatial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GHeatSolution {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub t_end: f64,
    pub steps: usize,
    pub dt: f64,
    /// Mass of `N(0, sigma_hi^2 t_end)` outside the region where the payoff
    /// and the grid are both unclamped.
    pub clamp_mass: f64,
}

impl GHeatSolution {
    /// Linear interpolation of the solution; constant beyond the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let (lo, hi) = (self.xs[0], self.xs[n - 1]);
        let x = x.clamp(lo, hi);
        let dx = (hi - lo) / (n - 1) as f64;
        let pos = (x - lo) / dx;
        let j = (pos.floor() as usize).min(n - 2);
        let w = pos - j as f64;
        if w == 0.0 {
            return self.values[j];
        }
        self.values[j] + w * (self.values[j + 1] - self.values[j])
    }

    pub fn to_two_column_text(&self) -> String {
        let mut out = String::new();
        for (x, u) in self.xs.iter().zip(&self.values) {
            out.push_str(&format!("{x} {u}\n"));
        }
        out
    }
}

/// Solves the G-heat equation up to `grid.t_end`.
pub fn solve_gheat(payoff: &PayoffSpec, band: &VolatilityBand, grid: &SpaceTimeGrid) -> Result<GHeatSolution> {
    grid.validate(band)?;
    let g = band.generator();
    let k = grid.intervals();
    let dx = 2.0 * grid.half_width / k as f64;
    let xs: Vec<f64> = (0..=k).map(|j| -grid.half_width + j as f64 * dx).collect();
    let mut u: Vec<f64> = xs.iter().map(|&x| payoff.eval(x)).collect();
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("payoff `{}` is not finite on the grid", payoff.name())));
    }

    let steps = ((grid.t_end / grid.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = grid.t_end / steps as f64;
    let inv_dx2 = 1.0 / (dx * dx);
    let mut next = u.clone();
    for _ in 0..steps {
        for j in 1..k {
            let d2 = (u[j + 1] - 2.0 * u[j] + u[j - 1]) * inv_dx2;
            next[j] = u[j] + dt * g.eval(d2);
        }
        std::mem::swap(&mut u, &mut next);
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in G-heat solution".into()));
    }

    let (plo, phi) = payoff.domain();
    let reach = grid.half_width.min(-plo).min(phi).max(0.0);
    let scale = band.hi() * grid.t_end.sqrt();
    let clamp_mass = erfc(reach / (scale * std::f64::consts::SQRT_2));

    Ok(GHeatSolution {
        xs,
        values: u,
        t_end: grid.t_end,
        steps,
        dt,
        clamp_mass,
    })
}

/// Upper and lower G-normal expectations of `phi` at time `t_end`, read at
/// the origin: `upper = u_phi(0)`, `lower = -u_{-phi}(0)`.
pub fn gnormal_pair(payoff: &PayoffSpec, band: &VolatilityBand, grid: &SpaceTimeGrid) -> Result<ExpectationPair> {
    let upper = solve_gheat(payoff, band, grid)?.value_at(0.0);
    let lower = -solve_gheat(&payoff.negated(), band, grid)?.value_at(0.0);
    Ok(ExpectationPair { upper, lower })
}

/// [`gnormal_pair`] on the default grid at `t_end = 1`.
pub fn gnormal_pair_default(payoff: &PayoffSpec, band: &VolatilityBand) -> Result<ExpectationPair> {
    gnormal_pair(payoff, band, &SpaceTimeGrid::default_for(band, 1.0))
}
