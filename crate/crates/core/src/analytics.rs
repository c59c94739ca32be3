//! Closed-form moments, crossing probabilities and lag-1 joint laws.
//!
//! Lag-1 product moments of every family reduce to the power-function
//! product `E[X_0^e X_1^e]` with `e = 1` (PFD, CPFD) or `e = -1` (Pareto),
//! because `V = 1 - X` and `S = sigma / X` on a shared latent path.

use serde::{Deserialize, Serialize};

use crate::processes::{Family, Process, ProcessKind};

/// Terms of the lag-1 product moment of a Kundu process.
///
/// `cross_moment = offset + a + b + c + d`. The four terms split the
/// power-function product `E[X_0^e X_1^e]` by which uniform attains each
/// maximum; Pareto terms carry the factor `sigma^2`, and the CPFD offset is
/// `1 - 2 s / (s + 1)` with `s = alpha + beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossMomentBreakdown {
    pub offset: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CrossMomentBreakdown {
    pub fn total(&self) -> f64 {
        self.offset + self.a + self.b + self.c + self.d
    }
}

/// Closed-form stationary moments. `None` marks a quantity whose existence
/// condition fails for the given parameters; `notes` says which.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub process: Process,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    /// `E[Z_{n-1} Z_n]`.
    pub cross_moment: Option<f64>,
    pub lag1_corr: Option<f64>,
    /// Kundu kinds only.
    pub breakdown: Option<CrossMomentBreakdown>,
    pub notes: Vec<String>,
}

/// Direction of a strict consecutive move `Z_{n-1} -> Z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveEvent {
    /// `Z_{n-1} < Z_n`
    Up,
    /// `Z_{n-1} > Z_n`
    Down,
}

/// The crossing probability inverted by the moment estimators, together
/// with the strict move it is the probability of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub probability: f64,
    pub event: MoveEvent,
}

/// Exact probabilities of a strict up move, strict down move and tie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveProbabilities {
    pub up: f64,
    pub down: f64,
    pub tie: f64,
}

impl MoveProbabilities {
    pub fn of(&self, event: MoveEvent) -> f64 {
        match event {
            MoveEvent::Up => self.up,
            MoveEvent::Down => self.down,
        }
    }
}

/// `E[X_0^e X_1^e]` for the Kundu PFD process, split into four terms, or
/// `None` when the expectation diverges.
pub fn kundu_product_terms(alpha: f64, beta: f64, e: f64) -> Option<[f64; 4]> {
    let p = e / alpha;
    let q = e / beta;
    let r = alpha / beta;
    let a1 = (alpha + e) / beta;
    let a2 = (beta + e) / alpha;
    let c = q + r;
    let c2 = p + 1.0 / r;
    let factors = [
        c + 1.0,
        c + 1.0 + a2,
        p + q + r + 1.0 / r + 1.0,
        1.0 + a1,
        1.0 + a2,
        1.0 + a1 + a2,
        c2 + 1.0,
        c2 + 1.0 + a1,
    ];
    if factors.iter().any(|&f| f <= 0.0) {
        return None;
    }
    Some([
        1.0 / (r * (c + 1.0) * (c + 1.0 + a2)),
        1.0 / (p + q + r + 1.0 / r + 1.0),
        (2.0 + a1 + a2) / ((1.0 + a1) * (1.0 + a2) * (1.0 + a1 + a2)),
        r / ((c2 + 1.0) * (c2 + 1.0 + a1)),
    ])
}

/// `E[Y_0^e Y_1^e]` for the A-M PFD process, as its two terms, or `None`
/// when the expectation diverges.
pub fn am_product_terms(alpha: f64, delta: f64, e: f64) -> Option<[f64; 2]> {
    let k = delta / (alpha - delta);
    let j1_den = e / alpha + e / (alpha - delta) + k + 1.0;
    let c = e / alpha;
    let a = (delta + e) / (alpha - delta);
    if j1_den <= 0.0 || c + 1.0 <= 0.0 || c + 1.0 + a <= 0.0 {
        return None;
    }
    Some([1.0 / j1_den, k / ((c + 1.0) * (c + 1.0 + a))])
}

/// Mean, variance, lag-1 product moment and lag-1 correlation.
pub fn theoretical_moments(process: &Process) -> MomentReport {
    let marginal = process.marginal();
    let mut notes = Vec::new();
    let mean = marginal.mean();
    let variance = marginal.variance();
    let shape = process.marginal_shape();
    if mean.is_none() {
        notes.push(format!("mean needs marginal shape > 1, got {shape}"));
    }
    if variance.is_none() {
        notes.push(format!("variance needs marginal shape > 2, got {shape}"));
    }

    let family = process.kind().family();
    let e = if family == Family::Pareto { -1.0 } else { 1.0 };
    let scale = process.sigma().map_or(1.0, |s| s * s);
    let offset = match family {
        Family::Cpfd => 1.0 - 2.0 * shape / (shape + 1.0),
        _ => 0.0,
    };

    let (cross_moment, breakdown) = if let Some(k) = process.kundu_params() {
        match kundu_product_terms(k.alpha(), k.beta(), e) {
            Some([a, b, c, d]) => {
                let bd = CrossMomentBreakdown {
                    offset,
                    a: scale * a,
                    b: scale * b,
                    c: scale * c,
                    d: scale * d,
                };
                (Some(bd.total()), Some(bd))
            }
            None => (None, None),
        }
    } else {
        let a = process.am_params().expect("A-M process");
        let cm = am_product_terms(a.alpha(), a.delta(), e).map(|[j1, j2]| offset + scale * (j1 + j2));
        (cm, None)
    };
    if cross_moment.is_none() {
        notes.push("lag-1 product moment diverges for these parameters".to_string());
    }

    let lag1_corr = match (mean, variance, cross_moment) {
        (Some(m), Some(v), Some(c)) => Some(((c - m * m) / v).clamp(-1.0, 1.0)),
        _ => None,
    };
    MomentReport {
        process: *process,
        mean,
        variance,
        cross_moment,
        lag1_corr,
        breakdown,
        notes,
    }
}

/// Probability that a Kundu PFD value exceeds its successor,
/// `P(X_{n-1} > X_n)`: `(alpha+beta)/(2 alpha+beta)` when `alpha > beta`,
/// `beta/(2 beta+alpha)` otherwise.
fn kundu_pfd_down(alpha: f64, beta: f64) -> f64 {
    if alpha > beta {
        (alpha + beta) / (2.0 * alpha + beta)
    } else {
        beta / (2.0 * beta + alpha)
    }
}

/// Exact strict-move and tie probabilities for consecutive values.
///
/// Kundu paths tie with probability 1/3 when `alpha == beta` (the shared
/// uniform wins both maxima); otherwise ties have probability zero.
pub fn move_probabilities(process: &Process) -> MoveProbabilities {
    let (x_up, x_down, tie) = if let Some(k) = process.kundu_params() {
        let tie = if k.alpha() == k.beta() { 1.0 / 3.0 } else { 0.0 };
        let down = kundu_pfd_down(k.alpha(), k.beta());
        (1.0 - down - tie, down, tie)
    } else {
        let a = process.am_params().expect("A-M process");
        let up = a.delta() / (a.alpha() + a.delta());
        (up, a.alpha() / (a.alpha() + a.delta()), 0.0)
    };
    match process.kind().family() {
        Family::Pfd => MoveProbabilities { up: x_up, down: x_down, tie },
        Family::Cpfd | Family::Pareto => MoveProbabilities { up: x_down, down: x_up, tie },
    }
}

/// The strict move whose probability [`crossing_prob`] returns for `kind`.
pub fn crossing_event(kind: ProcessKind) -> MoveEvent {
    if kind.is_kundu() == (kind.family() == Family::Pfd) {
        MoveEvent::Down
    } else {
        MoveEvent::Up
    }
}

/// The crossing probability used by the estimators.
///
/// Kundu kinds: the piecewise `(alpha+beta)/(2 alpha+beta)` / `beta/(2 beta+alpha)`
/// rule, which is the strict up-move probability of the CPFD and Pareto
/// paths and the strict down-move probability of the PFD path.
/// A-M kinds: `delta/(alpha+delta)`, the strict down-move probability of the
/// CPFD and Pareto paths and the up-move probability of the PFD path.
pub fn crossing_prob(process: &Process) -> Crossing {
    let event = crossing_event(process.kind());
    let probability = match (process.kundu_params(), process.am_params()) {
        (Some(k), _) => kundu_pfd_down(k.alpha(), k.beta()),
        (_, Some(a)) => a.delta() / (a.alpha() + a.delta()),
        _ => unreachable!("every process is Kundu or A-M"),
    };
    Crossing { probability, event }
}

/// Joint CDF of the power-function pair `(X_{n-1}, X_n)` on `[0,1]^2`.
fn pfd_joint(process: &Process, x0: f64, x1: f64) -> f64 {
    let (x0, x1) = (x0.clamp(0.0, 1.0), x1.clamp(0.0, 1.0));
    if let Some(k) = process.kundu_params() {
        let (a, b) = (k.alpha(), k.beta());
        x0.powf(b) * x1.powf(a) * x0.powf(a).min(x1.powf(b))
    } else {
        let am = process.am_params().expect("A-M process");
        let (a, d) = (am.alpha(), am.delta());
        x1.powf(d) * x0.powf(a).min(x1.powf(a - d))
    }
}

/// `P(Z_{n-1} <= earlier, Z_n <= later)` for the stationary process.
///
/// Arguments outside the support are clamped. When either argument is at
/// or beyond the upper end of the support the result is the marginal CDF of
/// the other argument.
pub fn joint_cdf(process: &Process, earlier: f64, later: f64) -> f64 {
    let marginal = process.marginal();
    let (lo, hi) = marginal.support();
    if earlier <= lo || later <= lo {
        return 0.0;
    }
    if earlier >= hi {
        return marginal.cdf(later);
    }
    if later >= hi {
        return marginal.cdf(earlier);
    }
    let family = process.kind().family();
    let to_x = |z: f64| match family {
        Family::Pfd => z,
        Family::Cpfd => 1.0 - z,
        Family::Pareto => process.sigma().unwrap_or(1.0) / z,
    };
    match family {
        Family::Pfd => pfd_joint(process, earlier, later),
        Family::Cpfd | Family::Pareto => {
            // Decreasing map: P(Z0 <= z0, Z1 <= z1) = P(X0 >= x0, X1 >= x1).
            let (x0, x1) = (to_x(earlier), to_x(later));
            let s = process.marginal_shape();
            let value = 1.0 - x0.powf(s) - x1.powf(s) + pfd_joint(process, x0, x1);
            value.clamp(0.0, 1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use quadrature::double_exponential::integrate;

    fn proc(kind: ProcessKind, a: f64, b: f64) -> Process {
        Process::new(kind, a, b, kind.is_pareto().then_some(1.0)).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn moment_examples() {
        let r = theoretical_moments(&proc(ProcessKind::KunduCpfd, 0.5, 0.1));
        assert!(close(r.mean.unwrap(), 0.625, 1e-14));
        assert!(close(r.variance.unwrap(), 0.6 / (1.6 * 1.6 * 2.6), 1e-14));
        let r = theoretical_moments(&proc(ProcessKind::AmCpfd, 1.0, 0.5));
        assert!(close(r.mean.unwrap(), 0.5, 1e-15));
        assert!(close(r.variance.unwrap(), 1.0 / 12.0, 1e-14));
        let r = theoretical_moments(&proc(ProcessKind::AmPareto, 4.0, 2.0));
        assert!(close(r.mean.unwrap(), 4.0 / 3.0, 1e-15));
        assert!(close(r.variance.unwrap(), 2.0 / 9.0, 1e-14));
    }

    #[test]
    fn inapplicable_quantities_are_flagged() {
        let r = theoretical_moments(&proc(ProcessKind::KunduPareto, 0.3, 0.4));
        assert!(r.mean.is_none() && r.variance.is_none() && r.cross_moment.is_none() && r.lag1_corr.is_none());
        assert!(!r.notes.is_empty());
        let r = theoretical_moments(&proc(ProcessKind::KunduPareto, 1.0, 2.0));
        assert!(r.mean.is_some() && r.variance.is_some() && r.cross_moment.is_some());
        let r = theoretical_moments(&proc(ProcessKind::AmPareto, 1.5, 0.2));
        assert!(r.variance.is_none() && r.cross_moment.is_none());
    }

    #[test]
    fn crossing_examples() {
        let c = crossing_prob(&proc(ProcessKind::AmCpfd, 1.0, 0.5));
        assert!(close(c.probability, 1.0 / 3.0, 1e-15) && c.event == MoveEvent::Down);
        let c = crossing_prob(&proc(ProcessKind::KunduCpfd, 2.0, 1.0));
        assert!(close(c.probability, 0.6, 1e-15) && c.event == MoveEvent::Up);
        let c = crossing_prob(&proc(ProcessKind::AmPareto, 4.0, 2.0));
        assert!(close(c.probability, 1.0 / 3.0, 1e-15) && c.event == MoveEvent::Down);
        assert_eq!(crossing_prob(&proc(ProcessKind::KunduPfd, 2.0, 1.0)).event, MoveEvent::Down);
        assert_eq!(crossing_prob(&proc(ProcessKind::AmPfd, 2.0, 1.0)).event, MoveEvent::Up);
    }

    #[test]
    fn crossing_vanishes_as_delta_shrinks() {
        let ps: Vec<f64> = [1e-1, 1e-3, 1e-6, 1e-9]
            .iter()
            .map(|&d| crossing_prob(&proc(ProcessKind::AmCpfd, 1.0, d)).probability)
            .collect();
        assert!(ps.windows(2).all(|w| w[1] < w[0]));
        assert!(ps[3] < 1e-8);
    }

    #[test]
    fn move_probabilities_sum_to_one() {
        for kind in ProcessKind::ALL {
            for (a, b) in [(2.0, 1.0), (1.0, 1.0), (0.5, 0.1), (0.3, 2.0)] {
                if !kind.is_kundu() && b >= a {
                    continue;
                }
                let p = proc(kind, a, b);
                let m = move_probabilities(&p);
                assert!((m.up + m.down + m.tie - 1.0).abs() < 1e-15);
                let c = crossing_prob(&p);
                assert_eq!(m.of(c.event), c.probability);
            }
        }
    }

    #[test]
    fn joint_cdf_examples() {
        let p = proc(ProcessKind::KunduCpfd, 1.0, 1.0);
        assert!(close(joint_cdf(&p, 0.5, 0.5), 0.625, 1e-15));
        for v in [0.1, 0.4, 0.9] {
            assert_eq!(joint_cdf(&p, 1.0, v), 1.0 - (1.0 - v) * (1.0 - v));
        }
        let q = proc(ProcessKind::AmCpfd, 2.0, 1.0);
        assert_eq!(joint_cdf(&q, 1.0, 1.0), 1.0);
        assert_eq!(joint_cdf(&q, -0.5, 0.5), 0.0);
    }

    #[test]
    fn joint_cdf_reduces_to_marginals() {
        for kind in ProcessKind::ALL {
            let p = proc(kind, 3.0, 1.2);
            let m = p.marginal();
            let (lo, hi) = m.support();
            let top = if hi.is_finite() { hi } else { f64::INFINITY };
            for k in 1..20 {
                let y = m.quantile(k as f64 / 20.0).unwrap();
                assert_eq!(joint_cdf(&p, top, y), m.cdf(y));
                assert_eq!(joint_cdf(&p, y, top), m.cdf(y));
                assert_eq!(joint_cdf(&p, lo, y), 0.0);
            }
        }
    }

    #[test]
    fn joint_cdf_is_two_increasing() {
        for kind in ProcessKind::ALL {
            for (a, b) in [(3.0, 1.2), (1.0, 1.0), (0.5, 0.1), (0.4, 2.5)] {
                if !kind.is_kundu() && b >= a {
                    continue;
                }
                let p = proc(kind, a, b);
                let m = p.marginal();
                let grid: Vec<f64> = (0..=11)
                    .map(|k| match k {
                        0 => m.support().0,
                        11 => m.support().1,
                        _ => m.quantile(k as f64 / 11.0).unwrap(),
                    })
                    .collect();
                for i in 1..grid.len() {
                    for j in 1..grid.len() {
                        let f = |x: f64, y: f64| joint_cdf(&p, x, y);
                        let mass = f(grid[i], grid[j]) - f(grid[i - 1], grid[j]) - f(grid[i], grid[j - 1])
                            + f(grid[i - 1], grid[j - 1]);
                        assert!(mass >= -1e-12, "{kind} ({a},{b}) cell ({i},{j}) mass {mass}");
                        assert!(f(grid[i], grid[j]) >= f(grid[i - 1], grid[j]) - 1e-15);
                    }
                }
            }
        }
    }

    /// Integrate the Kundu product over the three uniforms `(U_{-1}, U_0, U_1)`,
    /// splitting each inner integral at the kink of the maximum.
    fn kundu_product_quadrature(alpha: f64, beta: f64, e: f64) -> f64 {
        let tol = 1e-12;
        let outer = |u0: f64| {
            let a0 = u0.powf(1.0 / alpha);
            let kink_prev = a0.powf(beta).clamp(0.0, 1.0);
            let first = |t: f64| a0.max(t.powf(1.0 / beta)).powf(e);
            let f0 = integrate(first, 0.0, kink_prev, tol).integral + integrate(first, kink_prev, 1.0, tol).integral;
            let b1 = u0.powf(1.0 / beta);
            let kink_next = b1.powf(alpha).clamp(0.0, 1.0);
            let second = |t: f64| b1.max(t.powf(1.0 / alpha)).powf(e);
            let f1 = integrate(second, 0.0, kink_next, tol).integral + integrate(second, kink_next, 1.0, tol).integral;
            f0 * f1
        };
        integrate(outer, 0.0, 1.0, tol).integral
    }

    #[test]
    fn kundu_product_matches_triple_quadrature() {
        for &(a, b) in &[(1.5, 1.5), (2.0, 1.2), (1.1, 3.0), (4.0, 2.5), (0.5, 0.1), (0.3, 2.0)] {
            let closed: f64 = kundu_product_terms(a, b, 1.0).unwrap().iter().sum();
            let quad = kundu_product_quadrature(a, b, 1.0);
            assert!(close(closed, quad, 1e-6), "({a},{b}): {closed} vs {quad}");
        }
        for &(a, b) in &[(2.0, 2.0), (3.0, 1.5), (1.5, 4.0), (1.0, 2.0)] {
            let closed: f64 = kundu_product_terms(a, b, -1.0).unwrap().iter().sum();
            let quad = kundu_product_quadrature(a, b, -1.0);
            assert!(close(closed, quad, 1e-6), "pareto ({a},{b}): {closed} vs {quad}");
        }
    }

    #[test]
    fn kundu_product_terms_total_one_at_zero_power() {
        for &(a, b) in &[(1.0, 1.0), (0.2, 5.0), (3.0, 0.7)] {
            let t: f64 = kundu_product_terms(a, b, 0.0).unwrap().iter().sum();
            assert!(close(t, 1.0, 1e-14));
        }
    }

    /// A-M twin: `E[Y0^e Y1^e]` with `Y1 = max(Y0^c, U^(1/delta))`, `Y0 ~ PFD(alpha)`.
    fn am_product_quadrature(alpha: f64, delta: f64, e: f64) -> f64 {
        let c = alpha / (alpha - delta);
        let outer = |y0: f64| {
            let carried = y0.powf(c);
            let kink = carried.powf(delta);
            let inner = |u: f64| carried.max(u.powf(1.0 / delta)).powf(e);
            let f1 = integrate(inner, 0.0, kink, 1e-12).integral + integrate(inner, kink, 1.0, 1e-12).integral;
            alpha * y0.powf(alpha - 1.0) * y0.powf(e) * f1
        };
        integrate(outer, 0.0, 1.0, 1e-12).integral
    }

    #[test]
    fn am_product_matches_quadrature() {
        for &(a, d) in &[(1.0, 0.1), (2.0, 1.0), (4.0, 2.0), (3.0, 2.9)] {
            let closed: f64 = am_product_terms(a, d, 1.0).unwrap().iter().sum();
            assert!(close(closed, am_product_quadrature(a, d, 1.0), 1e-6));
        }
        for &(a, d) in &[(4.0, 2.0), (2.5, 1.0), (3.0, 0.5)] {
            let closed: f64 = am_product_terms(a, d, -1.0).unwrap().iter().sum();
            assert!(close(closed, am_product_quadrature(a, d, -1.0), 1e-6), "({a},{d})");
        }
    }

    #[test]
    fn am_pareto_has_no_singularity_at_unit_delta() {
        let around: Vec<f64> = [1.0 - 1e-9, 1.0, 1.0 + 1e-9]
            .iter()
            .map(|&d| theoretical_moments(&proc(ProcessKind::AmPareto, 3.0, d)).cross_moment.unwrap())
            .collect();
        assert!(around.iter().all(|v| v.is_finite()));
        assert!((around[0] - around[2]).abs() < 1e-7);
    }

    #[test]
    fn correlation_is_bounded() {
        for kind in ProcessKind::ALL {
            for a in [0.3, 1.0, 2.5, 6.0] {
                for b in [0.05, 0.5, 2.0, 5.0] {
                    let Ok(p) = Process::new(kind, a, b, kind.is_pareto().then_some(1.0)) else {
                        continue;
                    };
                    let r = theoretical_moments(&p);
                    if let Some(c) = r.lag1_corr {
                        assert!((-1.0..=1.0).contains(&c));
                        assert!(r.variance.unwrap() > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn breakdown_sums_to_cross_moment() {
        for kind in [ProcessKind::KunduPfd, ProcessKind::KunduCpfd, ProcessKind::KunduPareto] {
            let p = Process::new(kind, 2.0, 3.0, kind.is_pareto().then_some(2.0)).unwrap();
            let r = theoretical_moments(&p);
            assert_eq!(r.breakdown.unwrap().total(), r.cross_moment.unwrap());
        }
        assert!(theoretical_moments(&proc(ProcessKind::AmCpfd, 2.0, 1.0)).breakdown.is_none());
    }
}
