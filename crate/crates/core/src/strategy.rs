//! Adversary strategies: adapted rules choosing a volatility in the band at
//! each step from the path history.
//!
//! Controllers see the walk in per-step units: after `i` steps the running
//! sum is `S_i = sum theta_k zeta_k` with unit-variance noise. Monte Carlo
//! callers rescale by `sqrt(dt)` afterwards.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::band::VolatilityBand;
use crate::error::{input, Error, Result};
use crate::parallel::{derive_seed, item_rng};
use crate::schedule::BlockSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryStrategy {
    /// Always `sigma`.
    Constant { sigma: f64 },
    /// Cycles through `schedule`.
    Periodic { schedule: Vec<f64> },
    /// Interpolates between the band ends according to how far the running
    /// LIL statistic is from `target`: `sigma_lo` on target, `sigma_hi` once
    /// `gain * |R - target| >= 1`.
    Feedback { target: f64, gain: f64 },
    /// Randomly parameterized smooth feedback rule with interior values.
    Random { seed: u64 },
    /// Steers the sum at every block end towards `target` times the LIL
    /// normalizer, with blocks growing geometrically by `growth`.
    BlockTarget { target: f64, growth: f64 },
}

impl AdversaryStrategy {
    /// Short label such as `const:1` used in file names and reports.
    pub fn label(&self) -> String {
        match self {
            AdversaryStrategy::Constant { sigma } => format!("const:{sigma}"),
            AdversaryStrategy::Periodic { schedule } => format!(
                "periodic:{}",
                schedule.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("/")
            ),
            AdversaryStrategy::Feedback { target, gain } => format!("feedback:{target}:{gain}"),
            AdversaryStrategy::Random { seed } => format!("random#{seed}"),
            AdversaryStrategy::BlockTarget { target, growth } => format!("block:{target}:{growth}"),
        }
    }

    /// Parses a comma-separated list such as
    /// `const:1.0,periodic:0.5/1.0,feedback:0.2:4,block:0.3,random:10`.
    /// `random:K` expands to `K` random strategies seeded from `master_seed`.
    pub fn parse_list(text: &str, master_seed: u64) -> Result<Vec<AdversaryStrategy>> {
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let mut parts = item.split(':');
            let kind = parts.next().unwrap_or("");
            let args: Vec<&str> = parts.collect();
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad number `{s}` in strategy `{item}`")))
            };
            match (kind, args.as_slice()) {
                ("const" | "constant", [s]) => out.push(AdversaryStrategy::Constant { sigma: num(s)? }),
                ("periodic", [sched]) => out.push(AdversaryStrategy::Periodic {
                    schedule: sched.split('/').map(num).collect::<Result<_>>()?,
                }),
                ("feedback", [t]) => out.push(AdversaryStrategy::Feedback { target: num(t)?, gain: 4.0 }),
                ("feedback", [t, g]) => out.push(AdversaryStrategy::Feedback {
                    target: num(t)?,
                    gain: num(g)?,
                }),
                ("block" | "block_target", [t]) => out.push(AdversaryStrategy::BlockTarget {
                    target: num(t)?,
                    growth: 1.5,
                }),
                ("block" | "block_target", [t, g]) => out.push(AdversaryStrategy::BlockTarget {
                    target: num(t)?,
                    growth: num(g)?,
                }),
                ("random", [k]) => {
                    let k: u64 = k
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad count in strategy `{item}`")))?;
                    out.extend((0..k).map(|j| AdversaryStrategy::Random {
                        seed: derive_seed(master_seed, 0x5EED_0000 + j),
                    }));
                }
                _ => return input(format!("unrecognized strategy `{item}`")),
            }
        }
        if out.is_empty() {
            return input("strategy list is empty");
        }
        Ok(out)
    }

    /// Builds the per-path controller; `horizon` is the number of steps.
    pub fn controller(&self, band: &VolatilityBand, horizon: usize) -> Result<Controller> {
        let (lo, hi) = (band.lo(), band.hi());
        let kind = match self {
            AdversaryStrategy::Constant { sigma } => {
                if !band.contains(*sigma) {
                    return Err(Error::StrategyViolation {
                        step: 0,
                        theta: *sigma,
                        lo,
                        hi,
                    });
                }
                ControllerKind::Constant(*sigma)
            }
            AdversaryStrategy::Periodic { schedule } => {
                if schedule.is_empty() {
                    return input("periodic schedule is empty");
                }
                if let Some(&bad) = schedule.iter().find(|s| !band.contains(**s)) {
                    return Err(Error::StrategyViolation {
                        step: 0,
                        theta: bad,
                        lo,
                        hi,
                    });
                }
                ControllerKind::Periodic(schedule.clone())
            }
            AdversaryStrategy::Feedback { target, gain } => {
                if !(target.is_finite() && *gain >= 0.0 && gain.is_finite()) {
                    return input(format!("feedback strategy needs finite target and gain >= 0, got {target}, {gain}"));
                }
                ControllerKind::Feedback {
                    target: *target,
                    gain: *gain,
                }
            }
            AdversaryStrategy::Random { seed } => {
                let mut rng = item_rng(*seed, 0);
                ControllerKind::Random {
                    slope: rng.gen_range(-3.0..3.0),
                    frequency: rng.gen_range(0.0..0.5),
                    phase: rng.gen_range(0.0..std::f64::consts::TAU),
                }
            }
            AdversaryStrategy::BlockTarget { target, growth } => {
                if !target.is_finite() {
                    return input("block target must be finite");
                }
                let mut ends = BlockSchedule::Geometric { ratio: *growth }.boundaries(horizon)?;
                if ends.last() != Some(&horizon) {
                    ends.push(horizon.max(3));
                }
                ControllerKind::BlockTarget {
                    target: *target,
                    ends,
                    current: 0,
                }
            }
        };
        Ok(Controller { lo, hi, kind })
    }
}

#[derive(Debug, Clone)]
enum ControllerKind {
    Constant(f64),
    Periodic(Vec<f64>),
    Feedback { target: f64, gain: f64 },
    Random { slope: f64, frequency: f64, phase: f64 },
    BlockTarget { target: f64, ends: Vec<usize>, current: usize },
}

/// `sqrt(2 n ln ln n)`, with `n` floored at 3.
#[inline]
pub(crate) fn lil_normalizer(n: usize) -> f64 {
    let n = n.max(3) as f64;
    (2.0 * n * n.ln().ln()).sqrt()
}

/// Stateful per-path volatility selector.
#[derive(Debug, Clone)]
pub struct Controller {
    lo: f64,
    hi: f64,
    kind: ControllerKind,
}

impl Controller {
    /// Volatility for step `i + 1` given `i` completed steps with running sum
    /// `sum` (per-step units).
    #[inline]
    pub fn theta(&mut self, i: usize, sum: f64) -> f64 {
        let (lo, hi) = (self.lo, self.hi);
        match &mut self.kind {
            ControllerKind::Constant(s) => *s,
            ControllerKind::Periodic(s) => s[i % s.len()],
            ControllerKind::Feedback { target, gain } => {
                let r = sum / lil_normalizer(i);
                let w = (*gain * (r - *target).abs()).min(1.0);
                lo + (hi - lo) * w
            }
            ControllerKind::Random { slope, frequency, phase } => {
                let x = *slope * sum / (i.max(1) as f64).sqrt() + *frequency * i as f64 + *phase;
                let v = lo + (hi - lo) * 0.5 * (1.0 + x.sin());
                v.clamp(lo, hi)
            }
            ControllerKind::BlockTarget { target, ends, current } => {
                while *current + 1 < ends.len() && ends[*current] <= i {
                    *current += 1;
                }
                let end = ends[*current];
                if end <= i {
                    return hi;
                }
                let remaining = (end - i) as f64;
                let gap = *target * lil_normalizer(end) - sum;
                if gap.abs() <= hi * remaining.sqrt() {
                    lo
                } else {
                    hi
                }
            }
        }
    }

    /// [`Controller::theta`] with a band check.
    #[inline]
    pub fn checked_theta(&mut self, i: usize, sum: f64) -> Result<f64> {
        let theta = self.theta(i, sum);
        let slack = 1e-12 * self.hi;
        if !(theta >= self.lo - slack && theta <= self.hi + slack) {
            return Err(Error::StrategyViolation {
                step: i + 1,
                theta,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> VolatilityBand {
        VolatilityBand::new(0.5, 1.0).unwrap()
    }

    #[test]
    fn parse_list_expands_random() {
        let list = AdversaryStrategy::parse_list("const:1.0,periodic:0.5/1,feedback:0.2,block:0.3,random:3", 7).unwrap();
        assert_eq!(list.len(), 7);
        assert_eq!(list[0], AdversaryStrategy::Constant { sigma: 1.0 });
        assert_eq!(list[1], AdversaryStrategy::Periodic { schedule: vec![0.5, 1.0] });
        assert!(matches!(list[4], AdversaryStrategy::Random { .. }));
        assert_ne!(list[4], list[5]);
        assert!(AdversaryStrategy::parse_list("wobble:1", 0).is_err());
        assert!(AdversaryStrategy::parse_list("", 0).is_err());
    }

    #[test]
    fn out_of_band_constant_is_a_violation() {
        let s = AdversaryStrategy::Constant { sigma: 1.2 };
        assert!(matches!(s.controller(&band(), 10), Err(Error::StrategyViolation { .. })));
        let p = AdversaryStrategy::Periodic { schedule: vec![0.5, 0.3] };
        assert!(matches!(p.controller(&band(), 10), Err(Error::StrategyViolation { .. })));
    }

    #[test]
    fn every_kind_stays_in_band() {
        let all = AdversaryStrategy::parse_list("const:0.5,periodic:0.5/0.75/1,feedback:0.1:3,block:0.3,random:5", 1).unwrap();
        let mut rng = item_rng(9, 0);
        for s in &all {
            let mut c = s.controller(&band(), 5000).unwrap();
            let mut sum = 0.0;
            for i in 0..5000 {
                let th = c.checked_theta(i, sum).unwrap();
                sum += th * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            }
        }
    }

    #[test]
    fn json_descriptor_round_trip() {
        let s: AdversaryStrategy = serde_json::from_str(r#"{"kind":"block_target","target":0.3,"growth":1.5}"#).unwrap();
        assert_eq!(s, AdversaryStrategy::BlockTarget { target: 0.3, growth: 1.5 });
        let text = serde_json::to_string(&AdversaryStrategy::Constant { sigma: 0.5 }).unwrap();
        assert_eq!(text, r#"{"kind":"constant","sigma":0.5}"#);
    }
}
