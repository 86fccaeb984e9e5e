//! Upper and lower expectations over a finite set of priors, the capacity
//! pair they induce, and exact checks of the sublinear-expectation axioms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Tolerance used by every exact check in this module.
pub const EXACT_TOL: f64 = 1e-12;

/// A finite sample space together with a finite, nonempty set of priors.
///
/// Events are subsets of the atom list; the sigma-field is the power set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePriorModel {
    atoms: Vec<String>,
    priors: Vec<Vec<f64>>,
}

/// Supremum and infimum of the linear expectations over the prior set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationPair {
    pub upper: f64,
    pub lower: f64,
}

impl ExpectationPair {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Upper and lower capacities of one event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityPair {
    pub v_upper: f64,
    pub v_lower: f64,
}

impl FinitePriorModel {
    pub fn new(atoms: Vec<String>, priors: Vec<Vec<f64>>) -> Result<Self> {
        let model = Self { atoms, priors };
        model.validate()?;
        Ok(model)
    }

    /// Convenience constructor with atoms named `w0, w1, ...`.
    pub fn with_anonymous_atoms(priors: Vec<Vec<f64>>) -> Result<Self> {
        let k = priors.first().map(Vec::len).unwrap_or(0);
        Self::new((0..k).map(|i| format!("w{i}")).collect(), priors)
    }

    /// Checks the invariants; also used after deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::InvalidModel("model has no atoms".into()));
        }
        if self.priors.is_empty() {
            return Err(Error::InvalidModel("prior set is empty".into()));
        }
        let mut names: Vec<&String> = self.atoms.iter().collect();
        names.sort();
        names.dedup();
        if names.len() != self.atoms.len() {
            return Err(Error::InvalidModel("duplicate atom names".into()));
        }
        for (k, p) in self.priors.iter().enumerate() {
            if p.len() != self.atoms.len() {
                return Err(Error::InvalidModel(format!(
                    "prior {k} has {} weights for {} atoms",
                    p.len(),
                    self.atoms.len()
                )));
            }
            if p.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::InvalidModel(format!("prior {k} has a negative or non-finite weight")));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > EXACT_TOL {
                return Err(Error::InvalidModel(format!("prior {k} sums to {total}")));
            }
        }
        Ok(())
    }

    /// Random model with Dirichlet(1,...,1)-distributed priors.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, atoms: usize, priors: usize) -> Self {
        let rows = (0..priors)
            .map(|_| {
                let raw: Vec<f64> = (0..atoms).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|x| x / total).collect()
            })
            .collect();
        Self::with_anonymous_atoms(rows).expect("normalized random priors")
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn priors(&self) -> &[Vec<f64>] {
        &self.priors
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    fn check_rv(&self, rv: &[f64]) -> Result<()> {
        self.validate()?;
        if rv.len() != self.atoms.len() {
            return input(format!("random variable has {} entries for {} atoms", rv.len(), self.atoms.len()));
        }
        if rv.iter().any(|x| !x.is_finite()) {
            return input("random variable has a non-finite entry");
        }
        Ok(())
    }

    fn linear(prior: &[f64], rv: &[f64]) -> f64 {
        prior.iter().zip(rv).map(|(p, x)| p * x).sum()
    }

    /// Maximum over priors of the linear expectation, with the index of the
    /// first prior attaining it.
    pub fn upper_argmax(&self, rv: &[f64]) -> Result<(f64, usize)> {
        self.check_rv(rv)?;
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, p) in self.priors.iter().enumerate() {
            let e = Self::linear(p, rv);
            if e > best.0 {
                best = (e, k);
            }
        }
        Ok(best)
    }

    /// Minimum over priors of the linear expectation, ties to the first index.
    pub fn lower_argmin(&self, rv: &[f64]) -> Result<(f64, usize)> {
        self.check_rv(rv)?;
        let mut best = (f64::INFINITY, 0);
        for (k, p) in self.priors.iter().enumerate() {
            let e = Self::linear(p, rv);
            if e < best.0 {
                best = (e, k);
            }
        }
        Ok(best)
    }

    pub fn upper_expectation(&self, rv: &[f64]) -> Result<f64> {
        self.upper_argmax(rv).map(|(v, _)| v)
    }

    pub fn lower_expectation(&self, rv: &[f64]) -> Result<f64> {
        self.lower_argmin(rv).map(|(v, _)| v)
    }

    pub fn expectation_pair(&self, rv: &[f64]) -> Result<ExpectationPair> {
        Ok(ExpectationPair {
            upper: self.upper_expectation(rv)?,
            lower: self.lower_expectation(rv)?,
        })
    }

    /// Membership mask of an event given by atom names.
    pub fn event_mask<S: AsRef<str>>(&self, event: &[S]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.atoms.len()];
        for name in event {
            let name = name.as_ref();
            match self.atoms.iter().position(|a| a == name) {
                Some(i) => mask[i] = true,
                None => return input(format!("event contains unknown atom `{name}`")),
            }
        }
        Ok(mask)
    }

    /// Atom names of the complement event.
    pub fn complement<S: AsRef<str>>(&self, event: &[S]) -> Result<Vec<String>> {
        let mask = self.event_mask(event)?;
        Ok(self
            .atoms
            .iter()
            .zip(mask)
            .filter(|(_, inside)| !inside)
            .map(|(a, _)| a.clone())
            .collect())
    }

    pub fn indicator<S: AsRef<str>>(&self, event: &[S]) -> Result<Vec<f64>> {
        Ok(self
            .event_mask(event)?
            .into_iter()
            .map(|inside| if inside { 1.0 } else { 0.0 })
            .collect())
    }

    pub fn capacity_pair<S: AsRef<str>>(&self, event: &[S]) -> Result<CapacityPair> {
        let ind = self.indicator(event)?;
        Ok(CapacityPair {
            v_upper: self.upper_expectation(&ind)?,
            v_lower: self.lower_expectation(&ind)?,
        })
    }
}

/// One axiom check with its worst residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub pass: bool,
    pub checked: usize,
    pub worst_residual: f64,
}

impl AxiomCheck {
    fn new() -> Self {
        Self {
            pass: true,
            checked: 0,
            worst_residual: 0.0,
        }
    }

    /// Records a violation amount (positive means violated).
    fn record(&mut self, violation: f64) {
        self.checked += 1;
        let v = violation.max(0.0);
        if v > self.worst_residual {
            self.worst_residual = v;
        }
        if violation > EXACT_TOL {
            self.pass = false;
        }
    }
}

/// Per-axiom results over all pairs of the supplied random variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub monotonicity: AxiomCheck,
    pub constant_preserving: AxiomCheck,
    pub sub_additivity: AxiomCheck,
    pub positive_homogeneity: AxiomCheck,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.monotonicity.pass
            && self.constant_preserving.pass
            && self.sub_additivity.pass
            && self.positive_homogeneity.pass
    }

    pub fn worst_residual(&self) -> f64 {
        [
            self.monotonicity.worst_residual,
            self.constant_preserving.worst_residual,
            self.sub_additivity.worst_residual,
            self.positive_homogeneity.worst_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Homogeneity factors and constants used by [`verify_sublinear_axioms`].
pub const AXIOM_LAMBDAS: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 10.0];
pub const AXIOM_CONSTANTS: [f64; 5] = [-3.5, -1.0, 0.0, 0.75, 12.0];

/// Checks monotonicity on comparable pairs, constant preservation,
/// sub-additivity and positive homogeneity of the upper expectation.
pub fn verify_sublinear_axioms(model: &FinitePriorModel, rvs: &[Vec<f64>]) -> Result<AxiomReport> {
    if rvs.len() < 2 {
        return input("axiom check needs at least two random variables");
    }
    let uppers = rvs
        .iter()
        .map(|rv| model.upper_expectation(rv))
        .collect::<Result<Vec<_>>>()?;
    let n = model.num_atoms();

    let mut report = AxiomReport {
        monotonicity: AxiomCheck::new(),
        constant_preserving: AxiomCheck::new(),
        sub_additivity: AxiomCheck::new(),
        positive_homogeneity: AxiomCheck::new(),
    };

    for &c in &AXIOM_CONSTANTS {
        let e = model.upper_expectation(&vec![c; n])?;
        report.constant_preserving.record((e - c).abs() / c.abs().max(1.0));
    }

    for (i, x) in rvs.iter().enumerate() {
        for &lambda in &AXIOM_LAMBDAS {
            let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let e = model.upper_expectation(&scaled)?;
            let scale = (lambda * uppers[i]).abs().max(1.0);
            report
                .positive_homogeneity
                .record((e - lambda * uppers[i]).abs() / scale);
        }
        for (j, y) in rvs.iter().enumerate() {
            if i == j {
                continue;
            }
            if x.iter().zip(y).all(|(a, b)| a >= b) {
                report.monotonicity.record(uppers[j] - uppers[i]);
            }
            if i < j {
                let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                let e = model.upper_expectation(&sum)?;
                report.sub_additivity.record(e - uppers[i] - uppers[j]);
            }
        }
    }
    Ok(report)
}

/// Result of the duality identity for one event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityCheck {
    pub v_upper: f64,
    pub v_lower_complement: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Checks that the upper capacity of `event` plus the lower capacity of its
/// complement equals one.
pub fn verify_duality<S: AsRef<str>>(model: &FinitePriorModel, event: &[S]) -> Result<DualityCheck> {
    let up = model.capacity_pair(event)?.v_upper;
    let comp = model.complement(event)?;
    let low = model.capacity_pair(&comp)?.v_lower;
    let residual = (up + low - 1.0).abs();
    Ok(DualityCheck {
        v_upper: up,
        v_lower_complement: low,
        residual,
        pass: residual <= EXACT_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainDirection {
    Increasing,
    Decreasing,
}

/// Capacities along a monotone chain of events and their limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub direction: ChainDirection,
    pub upper_values: Vec<f64>,
    pub lower_values: Vec<f64>,
    /// Capacities of the union (increasing) or intersection (decreasing).
    pub limit: CapacityPair,
    pub monotone: bool,
    pub converges: bool,
}

/// Capacities along `chain`, which must be nested one way or the other.
pub fn verify_continuity<S: AsRef<str>>(model: &FinitePriorModel, chain: &[Vec<S>]) -> Result<ContinuityReport> {
    if chain.is_empty() {
        return input("event chain is empty");
    }
    let masks = chain
        .iter()
        .map(|e| model.event_mask(e))
        .collect::<Result<Vec<_>>>()?;
    let subset = |a: &[bool], b: &[bool]| a.iter().zip(b).all(|(x, y)| !x || *y);
    let increasing = masks.windows(2).all(|w| subset(&w[0], &w[1]));
    let decreasing = masks.windows(2).all(|w| subset(&w[1], &w[0]));
    let direction = match (increasing, decreasing) {
        (true, _) => ChainDirection::Increasing,
        (false, true) => ChainDirection::Decreasing,
        _ => return input("event chain is not monotone"),
    };

    let mut limit_mask = masks[0].clone();
    for m in &masks[1..] {
        for (l, x) in limit_mask.iter_mut().zip(m) {
            *l = match direction {
                ChainDirection::Increasing => *l || *x,
                ChainDirection::Decreasing => *l && *x,
            };
        }
    }
    let limit_event: Vec<&str> = model
        .atoms()
        .iter()
        .zip(&limit_mask)
        .filter(|(_, inside)| **inside)
        .map(|(a, _)| a.as_str())
        .collect();
    let limit = model.capacity_pair(&limit_event)?;

    let pairs = chain
        .iter()
        .map(|e| model.capacity_pair(e))
        .collect::<Result<Vec<_>>>()?;
    let upper_values: Vec<f64> = pairs.iter().map(|p| p.v_upper).collect();
    let lower_values: Vec<f64> = pairs.iter().map(|p| p.v_lower).collect();

    let ordered = |vals: &[f64]| {
        vals.windows(2).all(|w| match direction {
            ChainDirection::Increasing => w[1] >= w[0] - EXACT_TOL,
            ChainDirection::Decreasing => w[1] <= w[0] + EXACT_TOL,
        })
    };
    let monotone = ordered(&upper_values) && ordered(&lower_values);
    let last = pairs[pairs.len() - 1];
    let converges = (last.v_upper - limit.v_upper).abs() <= EXACT_TOL
        && (last.v_lower - limit.v_lower).abs() <= EXACT_TOL;

    Ok(ContinuityReport {
        direction,
        upper_values,
        lower_values,
        limit,
        monotone,
        converges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atom() -> FinitePriorModel {
        FinitePriorModel::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, 0.5], vec![0.8, 0.2]],
        )
        .unwrap()
    }

    #[test]
    fn upper_and_lower_on_two_atoms() {
        let m = two_atom();
        assert_eq!(m.upper_expectation(&[1.0, 0.0]).unwrap(), 0.8);
        assert_eq!(m.lower_expectation(&[1.0, 0.0]).unwrap(), 0.5);
        assert!((m.upper_expectation(&[1.0, -1.0]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(m.lower_expectation(&[1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(m.upper_expectation(&[3.25, 3.25]).unwrap(), 3.25);
        assert_eq!(m.lower_expectation(&[3.25, 3.25]).unwrap(), 3.25);
    }

    #[test]
    fn argmax_ties_go_to_first_prior() {
        let m = two_atom();
        let (_, k) = m.upper_argmax(&[1.0, 1.0]).unwrap();
        assert_eq!(k, 0);
        let (_, k) = m.upper_argmax(&[1.0, 0.0]).unwrap();
        assert_eq!(k, 1);
    }

    #[test]
    fn capacities_on_two_atoms() {
        let m = two_atom();
        let a = m.capacity_pair(&["a"]).unwrap();
        assert_eq!((a.v_upper, a.v_lower), (0.8, 0.5));
        let b = m.capacity_pair(&["b"]).unwrap();
        assert_eq!((b.v_upper, b.v_lower), (0.5, 0.2));
        let empty: [&str; 0] = [];
        let e = m.capacity_pair(&empty).unwrap();
        assert_eq!((e.v_upper, e.v_lower), (0.0, 0.0));
        let all = m.capacity_pair(&["a", "b"]).unwrap();
        assert_eq!((all.v_upper, all.v_lower), (1.0, 1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = two_atom();
        assert!(matches!(m.capacity_pair(&["z"]), Err(Error::InvalidInput(_))));
        assert!(matches!(m.upper_expectation(&[f64::NAN, 0.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(m.upper_expectation(&[1.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(
            FinitePriorModel::new(vec!["a".into()], vec![]),
            Err(Error::InvalidModel(_))
        ));
        assert!(matches!(
            FinitePriorModel::new(vec!["a".into(), "b".into()], vec![vec![0.6, 0.6]]),
            Err(Error::InvalidModel(_))
        ));
        let broken: FinitePriorModel = serde_json::from_str(r#"{"atoms":["a"],"priors":[]}"#).unwrap();
        assert!(matches!(broken.upper_expectation(&[1.0]), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn axioms_hold_on_two_atoms() {
        let m = two_atom();
        let report = verify_sublinear_axioms(&m, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 1.0]]).unwrap();
        assert!(report.all_pass(), "{report:?}");
        assert!(report.monotonicity.checked > 0);
        // E[X+Y] = 1 <= 0.8 + 0.5
        let x = m.upper_expectation(&[1.0, 0.0]).unwrap();
        let y = m.upper_expectation(&[0.0, 1.0]).unwrap();
        assert_eq!(m.upper_expectation(&[1.0, 1.0]).unwrap(), 1.0);
        assert!((x + y - 1.3).abs() < 1e-15);
        assert_eq!(m.upper_expectation(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn axiom_check_needs_two_variables() {
        assert!(verify_sublinear_axioms(&two_atom(), &[vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn duality_on_two_atoms() {
        let m = two_atom();
        let d = verify_duality(&m, &["a"]).unwrap();
        assert!(d.pass);
        assert_eq!((d.v_upper, d.v_lower_complement), (0.8, 0.2));
        let empty: [&str; 0] = [];
        let d = verify_duality(&m, &empty).unwrap();
        assert_eq!((d.v_upper, d.v_lower_complement), (0.0, 1.0));
    }

    #[test]
    fn continuity_on_finite_chains() {
        let m = two_atom();
        let up = verify_continuity(&m, &[vec![], vec!["a"], vec!["a", "b"]]).unwrap();
        assert_eq!(up.direction, ChainDirection::Increasing);
        assert_eq!(up.upper_values, vec![0.0, 0.8, 1.0]);
        assert!(up.monotone && up.converges);
        assert_eq!(up.limit.v_upper, 1.0);

        let down = verify_continuity(&m, &[vec!["a", "b"], vec!["b"], vec![]]).unwrap();
        assert_eq!(down.direction, ChainDirection::Decreasing);
        assert_eq!(down.upper_values, vec![1.0, 0.5, 0.0]);
        assert!(down.monotone && down.converges);

        assert!(verify_continuity(&m, &[vec!["a"], vec!["b"]]).is_err());
    }

    #[test]
    fn disjoint_events_are_additive_under_one_prior() {
        let m = FinitePriorModel::with_anonymous_atoms(vec![vec![0.1, 0.2, 0.3, 0.4]]).unwrap();
        let a = m.capacity_pair(&["w0"]).unwrap().v_upper;
        let b = m.capacity_pair(&["w2", "w3"]).unwrap().v_upper;
        let u = m.capacity_pair(&["w0", "w2", "w3"]).unwrap().v_upper;
        assert!((u - (a + b)).abs() < 1e-15);
    }

    #[test]
    fn model_json_round_trip() {
        let m = two_atom();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"atoms":["a","b"],"priors":[[0.5,0.5],[0.8,0.2]]}"#);
        let back: FinitePriorModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
