//! Bounded Lipschitz test functions sampled on a grid.
//!
//! A payoff is a strictly increasing sample grid with values, linearly
//! interpolated inside the grid and held constant outside it. Built-in
//! payoffs also keep their closed form, which is used for evaluation inside
//! the grid so that solvers do not pay an interpolation error on the data.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{input, Error, Result};

/// Half-width of the sample grid used by built-in payoffs.
pub const DEFAULT_HALF_WIDTH: f64 = 20.0;
/// Number of samples used by built-in payoffs.
pub const DEFAULT_POINTS: usize = 4001;

type Formula = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct PayoffSpec {
    name: String,
    xs: Vec<f64>,
    ys: Vec<f64>,
    exact: Option<Formula>,
}

impl fmt::Debug for PayoffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PayoffSpec")
            .field("name", &self.name)
            .field("points", &self.xs.len())
            .field("domain", &self.domain())
            .field("closed_form", &self.exact.is_some())
            .finish()
    }
}

fn uniform_grid(half_width: f64, points: usize) -> Vec<f64> {
    let step = 2.0 * half_width / (points - 1) as f64;
    (0..points).map(|j| -half_width + j as f64 * step).collect()
}

impl PayoffSpec {
    /// Payoff given by samples only.
    pub fn from_samples(name: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return input(format!(
                "payoff needs at least two (x, y) samples of equal length, got {} and {}",
                xs.len(),
                ys.len()
            ));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return input("payoff samples must be finite");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return input("payoff grid must be strictly increasing");
        }
        Ok(Self {
            name: name.into(),
            xs,
            ys,
            exact: None,
        })
    }

    /// Payoff with a closed form, sampled on a uniform grid over
    /// `[-half_width, half_width]`.
    pub fn from_fn<F>(name: impl Into<String>, f: F, half_width: f64, points: usize) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(half_width > 0.0 && half_width.is_finite()) || points < 2 {
            return input("payoff grid needs a positive half-width and at least two points");
        }
        let xs = uniform_grid(half_width, points);
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let mut spec = Self::from_samples(name, xs, ys)?;
        spec.exact = Some(Arc::new(f));
        Ok(spec)
    }

    fn builtin<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_fn(name, f, DEFAULT_HALF_WIDTH, DEFAULT_POINTS).expect("built-in payoff")
    }

    /// `x^2`, clamped outside the grid.
    pub fn square() -> Self {
        Self::builtin("square", |x| x * x)
    }

    pub fn abs() -> Self {
        Self::builtin("abs", f64::abs)
    }

    /// `max(x, 0)`.
    pub fn relu() -> Self {
        Self::builtin("relu", |x| x.max(0.0))
    }

    /// `|x|^r`.
    pub fn abs_pow(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return input(format!("abs_pow exponent must be positive, got {r}"));
        }
        Ok(Self::builtin(format!("abs_pow({r})"), move |x| x.abs().powf(r)))
    }

    pub fn linear(slope: f64) -> Self {
        Self::builtin(format!("linear({slope})"), move |x| slope * x)
    }

    pub fn constant(c: f64) -> Self {
        Self::builtin(format!("const({c})"), move |_| c)
    }

    /// One on `[a, b]`, zero outside `[a - delta, b + delta]`, linear in between.
    pub fn indicator_smooth(a: f64, b: f64, delta: f64) -> Result<Self> {
        if !(a <= b && delta > 0.0 && a.is_finite() && b.is_finite()) {
            return input(format!("indicator_smooth needs a <= b and delta > 0, got ({a}, {b}, {delta})"));
        }
        Ok(Self::builtin(format!("indicator_smooth({a},{b},{delta})"), move |x| {
            if x < a {
                (1.0 - (a - x) / delta).max(0.0)
            } else if x > b {
                (1.0 - (x - b) / delta).max(0.0)
            } else {
                1.0
            }
        }))
    }

    /// Even bump `1 - exp(|x| - eps*t/2)` on `|x| <= eps*t/2`, zero outside.
    pub fn lemma7_phi(epsilon: f64, t: f64) -> Result<Self> {
        if !(epsilon > 0.0 && t > 0.0 && epsilon.is_finite() && t.is_finite()) {
            return input(format!("lemma7_phi needs epsilon > 0 and t > 0, got ({epsilon}, {t})"));
        }
        let half = epsilon * t / 2.0;
        Ok(Self::builtin(format!("lemma7_phi({epsilon},{t})"), move |x| {
            if x.abs() <= half {
                1.0 - (x.abs() - half).exp()
            } else {
                0.0
            }
        }))
    }

    /// Parses a payoff name: `square`, `abs`, `relu`, `linear`,
    /// `abs_pow(r)`, `const(c)`, `indicator_smooth(a,b,d)`,
    /// `lemma7_phi(eps,t)`, or `@path` for a two-column file.
    pub fn parse_named(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(path) = spec.strip_prefix('@') {
            return Self::from_file(path);
        }
        let (head, args) = match spec.find('(') {
            Some(open) => {
                let close = spec
                    .rfind(')')
                    .filter(|&c| c > open)
                    .ok_or_else(|| Error::InvalidInput(format!("unbalanced parentheses in `{spec}`")))?;
                let args = spec[open + 1..close]
                    .split(',')
                    .map(|a| {
                        a.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidInput(format!("bad payoff argument `{a}`")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                (&spec[..open], args)
            }
            None => (spec, Vec::new()),
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                input(format!("payoff `{head}` takes {n} arguments, got {}", args.len()))
            }
        };
        match head.trim() {
            "square" => arity(0).map(|_| Self::square()),
            "abs" => arity(0).map(|_| Self::abs()),
            "relu" => arity(0).map(|_| Self::relu()),
            "linear" => arity(0).map(|_| Self::linear(1.0)),
            "abs_pow" => arity(1).and_then(|_| Self::abs_pow(args[0])),
            "const" => arity(1).map(|_| Self::constant(args[0])),
            "indicator_smooth" => arity(3).and_then(|_| Self::indicator_smooth(args[0], args[1], args[2])),
            "lemma7_phi" => arity(2).and_then(|_| Self::lemma7_phi(args[0], args[1])),
            other => input(format!("unknown payoff `{other}`")),
        }
    }

    /// Two-column numeric text: `x y` per line, whitespace or comma
    /// separated; `#` starts a comment.
    pub fn from_two_column_text(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return input(format!("line {}: expected two columns", lineno + 1));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("line {}: `{s}` is not a number", lineno + 1)))
            };
            xs.push(parse(cols[0])?);
            ys.push(parse(cols[1])?);
        }
        Self::from_samples(name, xs, ys)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_two_column_text(path.display().to_string(), &text)
    }

    pub fn to_two_column_text(&self) -> String {
        let mut out = String::new();
        for (x, y) in self.xs.iter().zip(&self.ys) {
            out.push_str(&format!("{x} {y}\n"));
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> &[f64] {
        &self.xs
    }

    pub fn samples(&self) -> &[f64] {
        &self.ys
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn has_closed_form(&self) -> bool {
        self.exact.is_some()
    }

    fn interpolate(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&g| g <= x);
        if k == 0 {
            return self.ys[0];
        }
        if k >= self.xs.len() {
            return self.ys[self.ys.len() - 1];
        }
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let w = (x - x0) / (x1 - x0);
        self.ys[k - 1] + w * (self.ys[k] - self.ys[k - 1])
    }

    /// Value at `x`; constant extension outside the grid.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        let xc = x.clamp(lo, hi);
        match &self.exact {
            Some(f) => f(xc),
            None => self.interpolate(xc),
        }
    }

    fn map_exact(&self, name: String, f: impl Fn(&PayoffSpec, f64) -> f64 + Send + Sync + 'static) -> Self {
        let inner = self.clone();
        let ys = self.xs.iter().map(|&x| f(&inner, x)).collect();
        let exact: Option<Formula> = if self.exact.is_some() {
            Some(Arc::new(move |x| f(&inner, x)))
        } else {
            None
        };
        Self {
            name,
            xs: self.xs.clone(),
            ys,
            exact,
        }
    }

    /// `-phi`.
    pub fn negated(&self) -> Self {
        self.map_exact(format!("-{}", self.name), |p, x| -p.eval(x))
    }

    /// `lambda * phi`.
    pub fn scaled(&self, lambda: f64) -> Self {
        self.map_exact(format!("{lambda}*{}", self.name), move |p, x| lambda * p.eval(x))
    }

    /// `x -> phi(x - b)` on the same grid.
    pub fn shifted(&self, b: f64) -> Self {
        self.map_exact(format!("{}(x-{b})", self.name), move |p, x| p.eval(x - b))
    }

    /// `phi + other` on this payoff's grid.
    pub fn plus(&self, other: &PayoffSpec) -> Self {
        let other = other.clone();
        let name = format!("{}+{}", self.name, other.name);
        let closed = other.exact.is_some();
        let mut out = self.map_exact(name, move |p, x| p.eval(x) + other.eval(x));
        if !closed {
            out.exact = None;
        }
        out
    }

    /// Minimum and maximum of the samples.
    pub fn bounds(&self) -> (f64, f64) {
        self.ys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)))
    }

    /// Largest slope between consecutive samples.
    pub fn lipschitz(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
            .fold(0.0, f64::max)
    }

    /// `phi(x) = phi(-x)` at every grid point, within `tol`.
    pub fn is_even(&self, tol: f64) -> bool {
        self.xs.iter().all(|&x| (self.eval(x) - self.eval(-x)).abs() <= tol)
    }

    /// Slopes between consecutive samples are nondecreasing within `tol`.
    pub fn is_convex(&self, tol: f64) -> bool {
        let slopes: Vec<f64> = self
            .xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        slopes.windows(2).all(|s| s[1] >= s[0] - tol)
    }

    pub fn is_concave(&self, tol: f64) -> bool {
        self.negated().is_convex(tol)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.bounds().0 >= 0.0
    }
}

/// Payoff names such as `lemma7_phi(1,1)` contain commas; quote them for CSV.
pub(crate) fn csv_name(name: &str) -> String {
    if name.contains([',', '"']) {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        name.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma7_phi_values() {
        let phi = PayoffSpec::lemma7_phi(2.0, 1.0).unwrap();
        assert!((phi.eval(0.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((phi.eval(0.0) - 0.6321).abs() < 1e-4);
        assert_eq!(phi.eval(1.0), 0.0);
        assert_eq!(phi.eval(-1.0), 0.0);
        assert_eq!(phi.eval(3.0), 0.0);
        assert!(phi.is_even(0.0));
        assert!(phi.is_nonnegative());
        let (lo, hi) = phi.bounds();
        assert!(lo >= 0.0 && hi <= 1.0 - (-1.0f64).exp() + 1e-15);
        assert!(PayoffSpec::lemma7_phi(0.0, 1.0).is_err());
        assert!(PayoffSpec::lemma7_phi(1.0, -1.0).is_err());
    }

    #[test]
    fn named_payoffs_parse() {
        for name in ["square", "abs", "relu", "linear", "indicator_smooth(-0.5, 0.5, 0.1)", "lemma7_phi(1,1)", "abs_pow(4)", "const(2)"] {
            let p = PayoffSpec::parse_named(name).unwrap();
            assert!(p.eval(0.3).is_finite(), "{name}");
        }
        assert!(PayoffSpec::parse_named("cubic").is_err());
        assert!(PayoffSpec::parse_named("lemma7_phi(1)").is_err());
        assert!(PayoffSpec::parse_named("lemma7_phi(1,1").is_err());
        let ind = PayoffSpec::parse_named("indicator_smooth(-0.5,0.5,0.1)").unwrap();
        assert_eq!(ind.eval(0.0), 1.0);
        assert!((ind.eval(0.55) - 0.5).abs() < 1e-12);
        assert_eq!(ind.eval(0.7), 0.0);
    }

    #[test]
    fn clamped_extension() {
        let sq = PayoffSpec::square();
        assert_eq!(sq.eval(25.0), 400.0);
        assert_eq!(sq.eval(-25.0), 400.0);
        let s = PayoffSpec::from_samples("s", vec![0.0, 1.0, 3.0], vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.eval(-4.0), 1.0);
        assert_eq!(s.eval(0.5), 2.0);
        assert_eq!(s.eval(2.0), 2.5);
        assert_eq!(s.eval(9.0), 2.0);
        assert_eq!(s.lipschitz(), 2.0);
        assert!(s.is_concave(0.0));
        assert!(!s.is_convex(0.0));
    }

    #[test]
    fn two_column_round_trip() {
        let text = "# x phi\n-1 1\n0, 0\n\n1 1 # tail\n";
        let p = PayoffSpec::from_two_column_text("v", text).unwrap();
        assert_eq!(p.grid(), &[-1.0, 0.0, 1.0]);
        assert!(p.is_convex(0.0) && p.is_even(0.0));
        let again = PayoffSpec::from_two_column_text("v", &p.to_two_column_text()).unwrap();
        assert_eq!(again.samples(), p.samples());
        assert!(PayoffSpec::from_two_column_text("v", "1 2 3\n").is_err());
        assert!(PayoffSpec::from_two_column_text("v", "1 2\n0 3\n").is_err());
    }

    #[test]
    fn transforms() {
        let r = PayoffSpec::relu();
        assert_eq!(r.negated().eval(2.0), -2.0);
        assert_eq!(r.scaled(3.0).eval(2.0), 6.0);
        assert_eq!(r.shifted(0.5).eval(2.0), 1.5);
        assert_eq!(r.plus(&PayoffSpec::abs()).eval(-2.0), 2.0);
        assert!(r.is_convex(1e-12));
        assert!(!PayoffSpec::abs().shifted(0.4).is_even(1e-9));
    }
}
