//! Summary statistics and method-of-moments estimators.
//!
//! Every estimator solves two equations: the sample mean against the
//! marginal mean, which fixes the marginal shape `s` (`alpha + beta` for
//! Kundu kinds, `alpha` for A-M kinds), and the crossing fraction `P`
//! against [`crossing_prob`](crate::analytics::crossing_prob):
//!
//! | family | `s` from mean `z` |
//! |--------|-------------------|
//! | PFD    | `z / (1 - z)`     |
//! | CPFD   | `(1 - z) / z`     |
//! | Pareto | `z / (z - sigma)` with `sigma` the sample minimum |
//!
//! and then
//!
//! * Kundu, `alpha > beta`: `P = s / (s + alpha)`, so `alpha = s (1 - P) / P`, `beta = s (2P - 1) / P`;
//! * Kundu, `alpha <= beta`: `P = beta / (beta + s)`, so `beta = s P / (1 - P)`, `alpha = s (1 - 2P) / (1 - P)`;
//! * A-M: `alpha = s`, `P = delta / (alpha + delta)`, so `delta = alpha P / (1 - P)`.

use serde::{Deserialize, Serialize};

use crate::analytics::{crossing_event, move_probabilities, theoretical_moments, MoveEvent};
use crate::error::{Error, Result};
use crate::processes::{Family, Process, ProcessKind};

/// Relative slack allowed when checking a Kundu branch's ordering constraint.
const ORDER_TOL: f64 = 1e-9;

/// Sample statistics of a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    /// Fraction of consecutive pairs with `z[i-1] < z[i]`.
    pub p_up: f64,
    /// Fraction of consecutive pairs with `z[i-1] > z[i]`.
    pub p_down: f64,
    pub sample_min: f64,
    /// Number of consecutive pairs.
    pub pairs: usize,
}

impl SummaryStats {
    /// Statistics whose crossing fraction for `kind` is `crossing` and
    /// whose opposite move takes the remaining mass (no ties).
    pub fn from_crossing(kind: ProcessKind, mean: f64, crossing: f64, sample_min: f64) -> Self {
        let (p_up, p_down) = match crossing_event(kind) {
            MoveEvent::Up => (crossing, 1.0 - crossing),
            MoveEvent::Down => (1.0 - crossing, crossing),
        };
        SummaryStats { mean, p_up, p_down, sample_min, pairs: 0 }
    }

    /// The fraction matched to the crossing probability of `kind`.
    pub fn crossing(&self, kind: ProcessKind) -> f64 {
        match crossing_event(kind) {
            MoveEvent::Up => self.p_up,
            MoveEvent::Down => self.p_down,
        }
    }
}

/// Mean, strict up/down fractions and minimum of `values`.
pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.len() < 2 {
        return Err(Error::usage(format!("need at least 2 values, got {}", values.len())));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite value {bad}")));
    }
    let pairs = values.len() - 1;
    let (mut up, mut down) = (0usize, 0usize);
    for w in values.windows(2) {
        if w[0] < w[1] {
            up += 1;
        } else if w[0] > w[1] {
            down += 1;
        }
    }
    Ok(SummaryStats {
        mean: crate::stats::mean(values),
        p_up: up as f64 / pairs as f64,
        p_down: down as f64 / pairs as f64,
        sample_min: values.iter().copied().fold(f64::INFINITY, f64::min),
        pairs,
    })
}

/// Population counterparts of [`SummaryStats`] for `process`; `None` when
/// the marginal mean does not exist.
pub fn theoretical_stats(process: &Process) -> Option<SummaryStats> {
    let mean = theoretical_moments(process).mean?;
    let moves = move_probabilities(process);
    Some(SummaryStats {
        mean,
        p_up: moves.up,
        p_down: moves.down,
        sample_min: process.marginal().support().0,
        pairs: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    AlphaGtBeta,
    AlphaLeBeta,
    /// A-M kinds have a single solution.
    NotApplicable,
}

/// Method-of-moments estimate. Parameters are the raw solutions of the
/// moment equations; when `valid` is false they violate the kind's domain
/// and `diagnostics` says how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub kind: ProcessKind,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub branch: Branch,
    pub valid: bool,
    /// Both Kundu branches satisfied their ordering constraint.
    pub ambiguous: bool,
    pub diagnostics: Vec<String>,
}

impl Estimate {
    /// `beta` or `delta`.
    pub fn second(&self) -> f64 {
        self.beta.or(self.delta).expect("estimate carries a second shape")
    }

    /// `(name, value)` rows in the order alpha, beta|delta, sigma.
    pub fn parameters(&self) -> Vec<(&'static str, f64)> {
        let mut rows = vec![("alpha", self.alpha), (self.kind.second_param(), self.second())];
        if let Some(s) = self.sigma {
            rows.push(("sigma", s));
        }
        rows
    }

    /// The estimated process; errors when the estimate is invalid.
    pub fn process(&self) -> Result<Process> {
        if !self.valid {
            return Err(Error::domain(format!(
                "invalid {} estimate: {}",
                self.kind,
                self.diagnostics.join("; ")
            )));
        }
        Process::new(self.kind, self.alpha, self.second(), self.sigma)
    }
}

struct Candidate {
    alpha: f64,
    beta: f64,
    branch: Branch,
    problems: Vec<String>,
}

fn kundu_candidates(s: f64, p: f64) -> [Candidate; 2] {
    let check = |alpha: f64, beta: f64, branch: Branch| {
        let mut problems = Vec::new();
        if !(alpha > 0.0 && alpha.is_finite()) {
            problems.push(format!("alpha = {alpha} is not positive"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            problems.push(format!("beta = {beta} is not positive"));
        }
        let slack = ORDER_TOL * alpha.abs().max(beta.abs());
        match branch {
            Branch::AlphaGtBeta if alpha <= beta - slack => {
                problems.push(format!("alpha > beta branch gave alpha = {alpha} <= beta = {beta}"))
            }
            Branch::AlphaLeBeta if alpha > beta + slack => {
                problems.push(format!("alpha <= beta branch gave alpha = {alpha} > beta = {beta}"))
            }
            _ => {}
        }
        Candidate { alpha, beta, branch, problems }
    };
    [
        check(s * (1.0 - p) / p, s * (2.0 * p - 1.0) / p, Branch::AlphaGtBeta),
        check(s * (1.0 - 2.0 * p) / (1.0 - p), s * p / (1.0 - p), Branch::AlphaLeBeta),
    ]
}

/// Invert the moment equations of `kind` at `stats`.
pub fn estimate(kind: ProcessKind, stats: &SummaryStats) -> Result<Estimate> {
    let p = stats.crossing(kind);
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Degenerate(format!(
            "crossing fraction {p} must lie strictly between 0 and 1"
        )));
    }
    if kind.is_kundu() && p == 0.5 {
        return Err(Error::Degenerate("crossing fraction 1/2 makes 2P - 1 vanish".into()));
    }
    let z = stats.mean;
    let (s, sigma) = match kind.family() {
        Family::Pfd | Family::Cpfd if !(z > 0.0 && z < 1.0) => {
            return Err(Error::Infeasible(format!("mean {z} must lie strictly inside (0, 1)")));
        }
        Family::Pfd => (z / (1.0 - z), None),
        Family::Cpfd => ((1.0 - z) / z, None),
        Family::Pareto => {
            let sigma = stats.sample_min;
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::Infeasible(format!("sample minimum {sigma} must be positive")));
            }
            if z <= sigma {
                return Err(Error::Infeasible(format!(
                    "mean {z} must exceed the sample minimum {sigma}"
                )));
            }
            (z / (z - sigma), Some(sigma))
        }
    };

    if !kind.is_kundu() {
        let delta = s * p / (1.0 - p);
        let mut diagnostics = Vec::new();
        if delta >= s {
            diagnostics.push(format!("delta = {delta} is not below alpha = {s}"));
        }
        return Ok(Estimate {
            kind,
            alpha: s,
            beta: None,
            delta: Some(delta),
            sigma,
            branch: Branch::NotApplicable,
            valid: diagnostics.is_empty(),
            ambiguous: false,
            diagnostics,
        });
    }

    let [gt, le] = kundu_candidates(s, p);
    let (chosen, valid, ambiguous, diagnostics) = match (gt.problems.is_empty(), le.problems.is_empty()) {
        (true, false) => (gt, true, false, Vec::new()),
        (false, true) => (le, true, false, Vec::new()),
        (true, true) => {
            let pick = if (gt.alpha - gt.beta).abs() >= (le.alpha - le.beta).abs() { gt } else { le };
            let note = "both branches satisfy their ordering constraint; kept the larger |alpha - beta|".to_string();
            (pick, true, true, vec![note])
        }
        (false, false) => {
            let mut diagnostics = gt.problems.clone();
            diagnostics.extend(le.problems.iter().cloned());
            let positive = |c: &Candidate| c.alpha > 0.0 && c.beta > 0.0;
            let pick = if !positive(&gt) && positive(&le) { le } else { gt };
            (pick, false, false, diagnostics)
        }
    };
    Ok(Estimate {
        kind,
        alpha: chosen.alpha,
        beta: Some(chosen.beta),
        delta: None,
        sigma,
        branch: chosen.branch,
        valid,
        ambiguous,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[0.2, 0.1, 0.3]).unwrap();
        assert!((s.mean - 0.2).abs() < 1e-15);
        assert_eq!((s.p_up, s.p_down, s.sample_min, s.pairs), (0.5, 0.5, 0.1, 2));
        assert_eq!(summarize(&[0.4, 0.4, 0.4]).unwrap().p_up, 0.0);
        assert!(matches!(summarize(&[0.4]), Err(Error::Usage(_))));
    }

    #[test]
    fn kundu_cpfd_example() {
        let s = SummaryStats::from_crossing(ProcessKind::KunduCpfd, 0.625, 6.0 / 11.0, 0.0);
        assert_eq!(s.p_up, 6.0 / 11.0);
        let e = estimate(ProcessKind::KunduCpfd, &s).unwrap();
        assert!(e.valid && e.branch == Branch::AlphaGtBeta);
        assert!(rel(e.alpha, 0.5) < 1e-12 && rel(e.second(), 0.1) < 1e-12);
    }

    #[test]
    fn am_pareto_example() {
        let s = SummaryStats::from_crossing(ProcessKind::AmPareto, 4.0 / 3.0, 1.0 / 3.0, 1.0);
        let e = estimate(ProcessKind::AmPareto, &s).unwrap();
        assert!(e.valid && e.branch == Branch::NotApplicable);
        assert_eq!(e.sigma, Some(1.0));
        assert!(rel(e.alpha, 4.0) < 1e-12 && rel(e.second(), 2.0) < 1e-12);
    }

    #[test]
    fn kundu_pareto_example() {
        let s = SummaryStats::from_crossing(ProcessKind::KunduPareto, 1.5, 0.4, 1.0);
        assert_eq!(s.p_up, 0.4);
        let e = estimate(ProcessKind::KunduPareto, &s).unwrap();
        assert!(e.valid && e.branch == Branch::AlphaLeBeta);
        assert!(rel(e.alpha, 1.0) < 1e-12 && rel(e.second(), 2.0) < 1e-12);
    }

    #[test]
    fn degenerate_and_infeasible_inputs() {
        let k = ProcessKind::KunduCpfd;
        for p in [0.0, 1.0, 0.5] {
            let s = SummaryStats::from_crossing(k, 0.3, p, 0.0);
            assert!(matches!(estimate(k, &s), Err(Error::Degenerate(_))), "p={p}");
        }
        let a = ProcessKind::AmCpfd;
        assert!(estimate(a, &SummaryStats::from_crossing(a, 0.3, 0.5, 0.0)).is_ok());
        let t = ProcessKind::AmPareto;
        let s = SummaryStats::from_crossing(t, 1.0, 0.3, 1.0);
        assert!(matches!(estimate(t, &s), Err(Error::Infeasible(_))));
        let v = SummaryStats::from_crossing(k, 1.2, 0.4, 0.0);
        assert!(matches!(estimate(k, &v), Err(Error::Infeasible(_))));
    }

    #[test]
    fn invalid_branches_are_reported_not_clamped() {
        // P < 1/3 is outside the range of both Kundu branches.
        let s = SummaryStats::from_crossing(ProcessKind::KunduCpfd, 0.3, 0.2, 0.0);
        let e = estimate(ProcessKind::KunduCpfd, &s).unwrap();
        assert!(!e.valid && !e.diagnostics.is_empty());
        assert!(e.process().is_err());
        // A-M needs delta < alpha, i.e. P < 1/2.
        let s = SummaryStats::from_crossing(ProcessKind::AmCpfd, 0.3, 0.6, 0.0);
        let e = estimate(ProcessKind::AmCpfd, &s).unwrap();
        assert!(!e.valid);
    }

    #[test]
    fn kundu_pfd_uses_down_fraction() {
        let p = Process::new(ProcessKind::KunduPfd, 2.0, 0.5, None).unwrap();
        let e = estimate(ProcessKind::KunduPfd, &theoretical_stats(&p).unwrap()).unwrap();
        assert!(e.valid && rel(e.alpha, 2.0) < 1e-12 && rel(e.second(), 0.5) < 1e-12);
    }

    #[test]
    fn pareto_scale_equivariance() {
        let values = [1.3, 2.0, 1.1, 4.0, 1.7, 1.2, 1.15];
        let base = estimate(ProcessKind::KunduPareto, &summarize(&values).unwrap()).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * 7.5).collect();
        let e = estimate(ProcessKind::KunduPareto, &summarize(&scaled).unwrap()).unwrap();
        assert!(rel(e.sigma.unwrap(), 7.5 * base.sigma.unwrap()) < 1e-14);
        assert!(rel(e.alpha, base.alpha) < 1e-12 && rel(e.second(), base.second()) < 1e-12);
    }

    proptest! {
        #[test]
        fn kundu_round_trip(kind in prop::sample::select(vec![ProcessKind::KunduPfd, ProcessKind::KunduCpfd, ProcessKind::KunduPareto]),
                            a in 0.05f64..20.0, b in 0.05f64..20.0, sigma in 0.01f64..100.0) {
            prop_assume!(!kind.is_pareto() || a + b > 1.05);
            let p = Process::new(kind, a, b, kind.is_pareto().then_some(sigma)).unwrap();
            let e = estimate(kind, &theoretical_stats(&p).unwrap()).unwrap();
            prop_assert!(e.valid);
            let want = if a > b { Branch::AlphaGtBeta } else { Branch::AlphaLeBeta };
            prop_assert_eq!(e.branch, want);
            prop_assert!(rel(e.alpha, a) < 1e-9 && rel(e.second(), b) < 1e-9);
        }

        #[test]
        fn am_round_trip(kind in prop::sample::select(vec![ProcessKind::AmPfd, ProcessKind::AmCpfd, ProcessKind::AmPareto]),
                         a in 1.05f64..30.0, frac in 0.01f64..0.99) {
            let d = a * frac;
            let p = Process::new(kind, a, d, kind.is_pareto().then_some(2.0)).unwrap();
            let e = estimate(kind, &theoretical_stats(&p).unwrap()).unwrap();
            prop_assert!(e.valid);
            prop_assert!(rel(e.alpha, a) < 1e-9 && rel(e.second(), d) < 1e-9);
        }

        #[test]
        fn valid_estimates_respect_domain(kind in prop::sample::select(ProcessKind::ALL.to_vec()),
                                          mean in 0.01f64..0.99, p in 0.01f64..0.99) {
            let stats = SummaryStats::from_crossing(kind, if kind.is_pareto() { 1.0 + mean } else { mean }, p, 1.0);
            if let Ok(e) = estimate(kind, &stats) {
                if e.valid {
                    prop_assert!(e.process().is_ok());
                }
            }
        }
    }
}
