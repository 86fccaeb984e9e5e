use serde::{Deserialize, Serialize};

/// One pass/fail line of an experiment. Missing bounds are unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

impl Verdict {
    /// Passes when `lo <= value <= hi`; infinite bounds are dropped.
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lo: lo.is_finite().then_some(lo),
            hi: hi.is_finite().then_some(hi),
            pass: value >= lo && value <= hi,
        }
    }

    /// A boolean outcome; `value` is 1 on success and 0 otherwise.
    pub fn check(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            lo: Some(1.0),
            hi: None,
            pass: ok,
        }
    }

    pub fn line(&self) -> String {
        let bound = match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => format!("in [{}, {}]", num(lo), num(hi)),
            (Some(lo), None) => format!(">= {}", num(lo)),
            (None, Some(hi)) => format!("<= {}", num(hi)),
            (None, None) => String::new(),
        };
        let tag = if self.pass { "PASS" } else { "FAIL" };
        format!("{tag} {}: {} {bound}", self.name, num(self.value))
    }
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x}")
    }
}

/// True when every verdict passed.
pub fn all_pass(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(|v| v.pass)
}
