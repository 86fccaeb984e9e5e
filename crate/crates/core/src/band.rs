//! Volatility uncertainty interval and the generator of the G-heat equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The interval `[sigma_lo, sigma_hi]` of admissible volatilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBand", into = "RawBand")]
pub struct VolatilityBand {
    sigma_lo: f64,
    sigma_hi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBand {
    sigma_lo: f64,
    sigma_hi: f64,
}

impl TryFrom<RawBand> for VolatilityBand {
    type Error = Error;
    fn try_from(raw: RawBand) -> Result<Self> {
        VolatilityBand::new(raw.sigma_lo, raw.sigma_hi)
    }
}

impl From<VolatilityBand> for RawBand {
    fn from(b: VolatilityBand) -> Self {
        RawBand {
            sigma_lo: b.sigma_lo,
            sigma_hi: b.sigma_hi,
        }
    }
}

impl VolatilityBand {
    /// Requires `0 < sigma_lo <= sigma_hi < infinity`.
    pub fn new(sigma_lo: f64, sigma_hi: f64) -> Result<Self> {
        if !(sigma_lo.is_finite() && sigma_hi.is_finite()) {
            return Err(Error::Config(format!("band [{sigma_lo}, {sigma_hi}] must be finite")));
        }
        if sigma_lo <= 0.0 {
            return Err(Error::Config(format!("band requires sigma_lo > 0, got {sigma_lo}")));
        }
        if sigma_lo > sigma_hi {
            return Err(Error::Config(format!(
                "band requires sigma_lo <= sigma_hi, got {sigma_lo} > {sigma_hi}"
            )));
        }
        Ok(Self { sigma_lo, sigma_hi })
    }

    /// Degenerate band with a single volatility.
    pub fn point(sigma: f64) -> Result<Self> {
        Self::new(sigma, sigma)
    }

    pub fn lo(&self) -> f64 {
        self.sigma_lo
    }

    pub fn hi(&self) -> f64 {
        self.sigma_hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma_lo == self.sigma_hi
    }

    /// Whether `theta` is admissible, with a relative slack of `1e-12`.
    pub fn contains(&self, theta: f64) -> bool {
        let slack = 1e-12 * self.sigma_hi;
        theta >= self.sigma_lo - slack && theta <= self.sigma_hi + slack
    }

    pub fn generator(&self) -> GFunction {
        GFunction { band: *self }
    }
}

impl std::str::FromStr for VolatilityBand {
    type Err = Error;

    /// Parses `"LO,HI"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::Config(format!("band must be `LO,HI`, got `{s}`")));
        }
        let parse = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| Error::Config(format!("band entry `{p}` is not a number")))
        };
        Self::new(parse(parts[0])?, parse(parts[1])?)
    }
}

/// `G(x) = (sigma_hi^2 x^+ - sigma_lo^2 x^-) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GFunction {
    band: VolatilityBand,
}

impl GFunction {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x >= 0.0 {
            0.5 * self.band.sigma_hi * self.band.sigma_hi * x
        } else {
            0.5 * self.band.sigma_lo * self.band.sigma_lo * x
        }
    }

    pub fn band(&self) -> VolatilityBand {
        self.band
    }
}

/// Free-function form of [`GFunction::eval`].
pub fn g_eval(band: &VolatilityBand, x: f64) -> f64 {
    band.generator().eval(x)
}
