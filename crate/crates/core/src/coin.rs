//! Product coin model: independent {0,1} coordinates whose success
//! probability is only known to lie in a per-coordinate interval.
//!
//! The prior set is every product measure with coordinate `i` Bernoulli(p),
//! `p` in `[p_lo(i), p_hi(i)]`. Cylinder capacities are multilinear in the
//! `p`s, so extremes are attained at the interval endpoints and factorize
//! across coordinates. Coordinates are numbered from 1.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::sublinear::{CapacityPair, FinitePriorModel, EXACT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinBand {
    pub p_lo: f64,
    pub p_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCoinModel {
    coords: Vec<CoinBand>,
}

/// A subset of the coin values {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueSet {
    pub zero: bool,
    pub one: bool,
}

impl ValueSet {
    pub const EMPTY: ValueSet = ValueSet { zero: false, one: false };
    pub const ZERO: ValueSet = ValueSet { zero: true, one: false };
    pub const ONE: ValueSet = ValueSet { zero: false, one: true };
    pub const ALL: ValueSet = ValueSet { zero: true, one: true };

    /// Parses a list of coin values; anything but 0 or 1 is rejected.
    pub fn from_values(values: &[u8]) -> Result<Self> {
        let mut set = Self::EMPTY;
        for &v in values {
            match v {
                0 => set.zero = true,
                1 => set.one = true,
                other => return input(format!("coin value {other} is not 0 or 1")),
            }
        }
        Ok(set)
    }

    fn contains(&self, v: u8) -> bool {
        if v == 0 {
            self.zero
        } else {
            self.one
        }
    }

    /// Probability of the set under Bernoulli(p).
    fn prob(&self, p: f64) -> f64 {
        match (self.zero, self.one) {
            (false, false) => 0.0,
            (true, true) => 1.0,
            (true, false) => 1.0 - p,
            (false, true) => p,
        }
    }
}

impl ProductCoinModel {
    pub fn uniform(p_lo: f64, p_hi: f64, horizon: usize) -> Result<Self> {
        Self::varying(vec![CoinBand { p_lo, p_hi }; horizon])
    }

    pub fn varying(coords: Vec<CoinBand>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidModel("coin model needs at least one coordinate".into()));
        }
        for (i, c) in coords.iter().enumerate() {
            if !(c.p_lo > 0.0 && c.p_lo <= c.p_hi && c.p_hi < 1.0) {
                return Err(Error::InvalidModel(format!(
                    "coordinate {}: need 0 < p_lo <= p_hi < 1, got [{}, {}]",
                    i + 1,
                    c.p_lo,
                    c.p_hi
                )));
            }
        }
        Ok(Self { coords })
    }

    pub fn horizon(&self) -> usize {
        self.coords.len()
    }

    pub fn band(&self, coord: usize) -> Result<CoinBand> {
        self.check_coord(coord)?;
        Ok(self.coords[coord - 1])
    }

    fn check_coord(&self, coord: usize) -> Result<()> {
        if coord == 0 || coord > self.coords.len() {
            return input(format!("coordinate {coord} outside horizon 1..={}", self.coords.len()));
        }
        Ok(())
    }

    /// Capacities of `{X_coord in set}`.
    pub fn marginal(&self, coord: usize, set: ValueSet) -> Result<CapacityPair> {
        let b = self.band(coord)?;
        let (a, c) = (set.prob(b.p_lo), set.prob(b.p_hi));
        Ok(CapacityPair {
            v_upper: a.max(c),
            v_lower: a.min(c),
        })
    }

    /// Capacities of the cylinder `{X_i in D_i for every listed i}` by
    /// per-coordinate optimization.
    pub fn cylinder(&self, constraints: &[(usize, ValueSet)]) -> Result<CapacityPair> {
        let mut seen = Vec::with_capacity(constraints.len());
        let mut upper = 1.0;
        let mut lower = 1.0;
        for &(coord, set) in constraints {
            if seen.contains(&coord) {
                return input(format!("coordinate {coord} constrained twice"));
            }
            seen.push(coord);
            let m = self.marginal(coord, set)?;
            upper *= m.v_upper;
            lower *= m.v_lower;
        }
        Ok(CapacityPair {
            v_upper: upper,
            v_lower: lower,
        })
    }

    /// Capacities of `{X_i = 1 for some i in first..=last}`, obtained from the
    /// cylinder `{X_i = 0 for all i}` through the duality identity.
    pub fn union_of_ones(&self, first: usize, last: usize) -> Result<CapacityPair> {
        if first == 0 || first > last {
            return input(format!("invalid coordinate range {first}..={last}"));
        }
        self.check_coord(last)?;
        let zeros: Vec<(usize, ValueSet)> = (first..=last).map(|i| (i, ValueSet::ZERO)).collect();
        let all_zero = self.cylinder(&zeros)?;
        Ok(CapacityPair {
            v_upper: 1.0 - all_zero.v_lower,
            v_lower: 1.0 - all_zero.v_upper,
        })
    }

    /// Explicit four-atom model of coordinates `(i, j)` whose priors are the
    /// four endpoint products. Atoms are named `"xy"` with `x = X_i`, `y = X_j`.
    pub fn pair_model(&self, i: usize, j: usize) -> Result<FinitePriorModel> {
        let (bi, bj) = (self.band(i)?, self.band(j)?);
        if i == j {
            return input("pair model needs two distinct coordinates");
        }
        let atoms = ["00", "01", "10", "11"].iter().map(|s| s.to_string()).collect();
        let mut priors = Vec::with_capacity(4);
        for &p in &[bi.p_lo, bi.p_hi] {
            for &q in &[bj.p_lo, bj.p_hi] {
                priors.push(vec![(1.0 - p) * (1.0 - q), (1.0 - p) * q, p * (1.0 - q), p * q]);
            }
        }
        FinitePriorModel::new(atoms, priors)
    }

    /// Full enumeration over `2^M` outcomes and all `2^M` endpoint products.
    /// Outcome atoms are bit strings, coordinate 1 first.
    pub fn enumerate(&self) -> Result<FinitePriorModel> {
        let m = self.horizon();
        if m > 12 {
            return input(format!("enumeration limited to 12 coordinates, horizon is {m}"));
        }
        let size = 1usize << m;
        let bits = |w: usize, i: usize| (w >> (m - 1 - i)) & 1;
        let atoms = (0..size)
            .map(|w| (0..m).map(|i| if bits(w, i) == 1 { '1' } else { '0' }).collect())
            .collect();
        let priors = (0..size)
            .map(|choice| {
                (0..size)
                    .map(|w| {
                        (0..m)
                            .map(|i| {
                                let b = self.coords[i];
                                let p = if bits(choice, i) == 1 { b.p_hi } else { b.p_lo };
                                if bits(w, i) == 1 {
                                    p
                                } else {
                                    1.0 - p
                                }
                            })
                            .product()
                    })
                    .collect()
            })
            .collect();
        FinitePriorModel::new(atoms, priors)
    }
}

/// Factorization of joint capacities of `{X_i in D, X_j in G}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceCheck {
    pub joint: CapacityPair,
    pub product: CapacityPair,
    pub upper_factorizes: bool,
    pub lower_factorizes: bool,
}

/// Joint capacities from the explicit pair model against the product of
/// the marginals.
pub fn pairwise_independence_check(
    coin: &ProductCoinModel,
    i: usize,
    j: usize,
    d: ValueSet,
    g: ValueSet,
) -> Result<IndependenceCheck> {
    let model = coin.pair_model(i, j)?;
    let event: Vec<&str> = [("00", 0u8, 0u8), ("01", 0, 1), ("10", 1, 0), ("11", 1, 1)]
        .iter()
        .filter(|(_, x, y)| d.contains(*x) && g.contains(*y))
        .map(|(name, _, _)| *name)
        .collect();
    let joint = model.capacity_pair(&event)?;
    let (mi, mj) = (coin.marginal(i, d)?, coin.marginal(j, g)?);
    let product = CapacityPair {
        v_upper: mi.v_upper * mj.v_upper,
        v_lower: mi.v_lower * mj.v_lower,
    };
    Ok(IndependenceCheck {
        joint,
        product,
        upper_factorizes: (joint.v_upper - product.v_upper).abs() <= EXACT_TOL,
        lower_factorizes: (joint.v_lower - product.v_lower).abs() <= EXACT_TOL,
    })
}

/// Tail bound for the convergent Borel-Cantelli part at one start index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub n: usize,
    pub horizon: usize,
    /// Upper capacity of the union of `{X_i = 1}` over `n..=horizon`.
    pub union_upper: f64,
    /// Sum of the individual upper capacities over the same range.
    pub tail_sum: f64,
    pub holds: bool,
}

/// Checks `V(union_{i=n}^M A_i) <= sum_{i=n}^M V(A_i)` with `A_i = {X_i = 1}`.
pub fn bc_convergent_check(coin: &ProductCoinModel, n: usize) -> Result<TailBound> {
    let m = coin.horizon();
    if n == 0 || n > m {
        return input(format!("start index {n} outside horizon 1..={m}"));
    }
    let union_upper = coin.union_of_ones(n, m)?.v_upper;
    let tail_sum = (n..=m)
        .map(|i| coin.marginal(i, ValueSet::ONE).map(|c| c.v_upper))
        .sum::<Result<f64>>()?;
    Ok(TailBound {
        n,
        horizon: m,
        union_upper,
        tail_sum,
        holds: union_upper <= tail_sum + EXACT_TOL,
    })
}

/// Tail bounds for every start index; the bound sequence must be
/// nonincreasing in `n`.
pub fn bc_convergent_profile(coin: &ProductCoinModel) -> Result<(Vec<TailBound>, bool)> {
    let rows = (1..=coin.horizon())
        .map(|n| bc_convergent_check(coin, n))
        .collect::<Result<Vec<_>>>()?;
    let decreasing = rows.windows(2).all(|w| {
        w[1].tail_sum <= w[0].tail_sum && w[1].union_upper <= w[0].union_upper + EXACT_TOL
    }) && rows.iter().all(|r| r.holds);
    Ok((rows, decreasing))
}

/// Exponential bound from the divergent Borel-Cantelli part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergentBound {
    pub n: usize,
    pub horizon: usize,
    /// Lower capacity of the union of `{X_i = 1}` over `n..=horizon`.
    pub union_lower: f64,
    /// `1 - v(union)`.
    pub miss: f64,
    /// `prod (1 - v(A_i))`.
    pub product: f64,
    /// `exp(-sum v(A_i))`.
    pub exp_bound: f64,
    pub identity_residual: f64,
    pub holds: bool,
}

/// Checks `1 - v(union A_i) = prod (1 - v(A_i)) <= exp(-sum v(A_i))`.
pub fn bc_divergent_check(coin: &ProductCoinModel, n: usize, horizon: usize) -> Result<DivergentBound> {
    if horizon > coin.horizon() {
        return input(format!("horizon {horizon} exceeds model horizon {}", coin.horizon()));
    }
    let union_lower = coin.union_of_ones(n, horizon)?.v_lower;
    let lows = (n..=horizon)
        .map(|i| coin.marginal(i, ValueSet::ONE).map(|c| c.v_lower))
        .collect::<Result<Vec<_>>>()?;
    let product: f64 = lows.iter().map(|v| 1.0 - v).product();
    let exp_bound = (-lows.iter().sum::<f64>()).exp();
    let miss = 1.0 - union_lower;
    let identity_residual = (miss - product).abs();
    Ok(DivergentBound {
        n,
        horizon,
        union_lower,
        miss,
        product,
        exp_bound,
        identity_residual,
        holds: identity_residual <= EXACT_TOL && product <= exp_bound,
    })
}
