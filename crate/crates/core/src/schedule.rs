//! Block boundaries `n_1 < n_2 < ...` used by block-increment statistics and
//! by the block-targeting adversary.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BlockSchedule {
    /// `n_k = k^k` for `k = 1..=k_max`, `k_max <= 8`.
    KPowK { k_max: u32 },
    /// `n_k = floor(exp(k^alpha))`, duplicates removed, starting at 3.
    ExpAlpha { alpha: f64 },
    /// `n_1 = 3`, `n_{k+1} = max(n_k + 1, ceil(ratio * n_k))`.
    Geometric { ratio: f64 },
}

impl Default for BlockSchedule {
    fn default() -> Self {
        BlockSchedule::Geometric { ratio: 1.5 }
    }
}

impl BlockSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BlockSchedule::KPowK { k_max } if k_max == 0 || k_max > 8 => {
                input(format!("k_pow_k schedule supports 1 <= k_max <= 8, got {k_max}"))
            }
            BlockSchedule::ExpAlpha { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                input(format!("exp_alpha schedule needs 0 < alpha <= 1, got {alpha}"))
            }
            BlockSchedule::Geometric { ratio } if !(ratio > 1.0 && ratio.is_finite()) => {
                input(format!("geometric schedule needs ratio > 1, got {ratio}"))
            }
            _ => Ok(()),
        }
    }

    /// All boundaries not exceeding `limit`, strictly increasing.
    pub fn boundaries(&self, limit: usize) -> Result<Vec<usize>> {
        self.validate()?;
        let mut out: Vec<usize> = Vec::new();
        match *self {
            BlockSchedule::KPowK { k_max } => {
                for k in 1..=k_max as usize {
                    let n = k.pow(k as u32);
                    if n > limit {
                        break;
                    }
                    out.push(n);
                }
            }
            BlockSchedule::ExpAlpha { alpha } => {
                let mut k = 1.0f64;
                loop {
                    let v = (k.powf(alpha)).exp().floor();
                    if v > limit as f64 {
                        break;
                    }
                    let n = v as usize;
                    if n >= 3 && out.last().is_none_or(|&last| n > last) {
                        out.push(n);
                    }
                    k += 1.0;
                    if k > 1e7 {
                        break;
                    }
                }
            }
            BlockSchedule::Geometric { ratio } => {
                let mut n = 3usize;
                while n <= limit {
                    out.push(n);
                    n = (n + 1).max((ratio * n as f64).ceil() as usize);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_pow_k_table() {
        let b = BlockSchedule::KPowK { k_max: 8 }.boundaries(usize::MAX).unwrap();
        assert_eq!(b, vec![1, 4, 27, 256, 3125, 46656, 823543, 16777216]);
        let ratio = b[6] as f64 / b[7] as f64;
        assert!((ratio - 0.0491).abs() < 1e-4);
        assert_eq!(BlockSchedule::KPowK { k_max: 8 }.boundaries(1_000_000).unwrap().len(), 7);
        assert!(BlockSchedule::KPowK { k_max: 9 }.boundaries(10).is_err());
    }

    #[test]
    fn geometric_and_exp_alpha_are_increasing() {
        for s in [BlockSchedule::Geometric { ratio: 1.5 }, BlockSchedule::ExpAlpha { alpha: 0.5 }] {
            let b = s.boundaries(1_000_000).unwrap();
            assert!(b[0] >= 3);
            assert!(b.windows(2).all(|w| w[1] > w[0]));
            assert!(*b.last().unwrap() <= 1_000_000);
        }
        let g = BlockSchedule::Geometric { ratio: 1.5 }.boundaries(20).unwrap();
        assert_eq!(g, vec![3, 5, 8, 12, 18]);
        assert!(BlockSchedule::Geometric { ratio: 1.0 }.validate().is_err());
        assert!(BlockSchedule::ExpAlpha { alpha: 1.5 }.validate().is_err());
    }
}
