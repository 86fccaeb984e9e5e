//! Adaptive Gauss-Kronrod (7/15) quadrature and Gaussian expectations.

use crate::error::{input, Result};
use crate::payoff::PayoffSpec;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth == 0 || (b - a) < 1e-12 {
        return (val, err);
    }
    let m = 0.5 * (a + b);
    let (l, el) = adapt(f, a, m, 0.5 * tol, depth - 1);
    let (r, er) = adapt(f, m, b, 0.5 * tol, depth - 1);
    (l + r, el + er)
}

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`, returning the
/// value and the accumulated error estimate. The interval is first cut into
/// `panels` equal pieces so that narrow features are not stepped over.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> (f64, f64) {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut err = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == panels { b } else { lo + width };
        let (v, e) = adapt(&f, lo, hi, tol / panels as f64, 40);
        total += v;
        err += e;
    }
    (total, err)
}

/// Gaussian expectation with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianReference {
    pub value: f64,
    pub error_estimate: f64,
    /// Whether the payoff passed the numerical convexity check.
    pub convex: bool,
}

/// Truncation of the integration range, in standard deviations.
const TRUNCATION: f64 = 12.0;

/// `E[phi(sigma Z)]` for standard normal `Z`.
pub fn gaussian_expectation(payoff: &PayoffSpec, sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return input(format!("gaussian expectation needs sigma > 0, got {sigma}"));
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let a = TRUNCATION * sigma;
    let (v, e) = integrate(|y| payoff.eval(y) * (-y * y * inv).exp() * norm, -a, a, 1e-11, 48);
    Ok((v, e))
}

/// Closed-form G-normal upper expectation of a convex payoff: the
/// classical Gaussian expectation at volatility `sigma`. Non-convex payoffs
/// are flagged but still integrated.
pub fn convex_reference(payoff: &PayoffSpec, sigma: f64) -> Result<GaussianReference> {
    let convex = payoff.is_convex(1e-9);
    if !convex {
        log::warn!("payoff `{}` is not convex on its grid", payoff.name());
    }
    let (value, error_estimate) = gaussian_expectation(payoff, sigma)?;
    Ok(GaussianReference {
        value,
        error_estimate,
        convex,
    })
}
