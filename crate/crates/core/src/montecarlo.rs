//! Monte-Carlo oracle for the closed forms and the simulation study of the
//! moment estimators.
//!
//! Standard errors come from a delete-one-batch jackknife over
//! `floor(sqrt(n))` contiguous batches of the path, which accounts for the
//! serial dependence of the processes.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{am_product_terms, joint_cdf, kundu_product_terms, move_probabilities, theoretical_moments};
use crate::error::{Error, Result};
use crate::inference::{estimate, summarize};
use crate::numfmt::format_g;
use crate::processes::{Process, ProcessSpec};
use crate::rng::derive_seed;
use crate::stats::{grouped_jackknife, kolmogorov_pvalue, ks_statistic, quantile_sorted, sample_sd};

/// Pass threshold on `|z|`.
pub const Z_LIMIT: f64 = 3.0;
/// Significance level of the marginal Kolmogorov-Smirnov check.
pub const KS_LEVEL: f64 = 0.01;
pub const MIN_CHECK_LENGTH: usize = 10_000;
pub const MIN_JOINT_PAIRS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub name: String,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub z: f64,
    pub pass: bool,
    /// The summands of the statistic have finite variance, so `z` is
    /// asymptotically standard normal. When false the row is still
    /// reported but the z-test has no calibrated level.
    pub finite_variance: bool,
}

impl ValidationRow {
    fn new(name: &str, closed_form: f64, empirical: f64, std_error: f64, floor: f64, finite_variance: bool) -> Self {
        let std_error = std_error.max(floor);
        let z = (empirical - closed_form) / std_error;
        ValidationRow {
            name: name.to_string(),
            closed_form,
            empirical,
            std_error,
            z,
            pass: z.abs() <= Z_LIMIT,
            finite_variance,
        }
    }
}

/// Kolmogorov-Smirnov comparison of a thinned path with the stationary marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsCheck {
    pub statistic: f64,
    pub p_value: f64,
    /// Number of values compared.
    pub sample_size: usize,
    /// Every `stride`-th value of the path was used.
    pub stride: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub process: Process,
    pub path_length: usize,
    pub seed: u64,
    pub rows: Vec<ValidationRow>,
    pub ks: KsCheck,
    /// Closed forms skipped because they do not exist for these parameters.
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.ks.pass && self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, name: &str) -> Option<&ValidationRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// `quantity,closed_form,empirical,std_error,z,pass,finite_variance`, with the KS check
    /// as a final row whose `closed_form` column holds the level and `empirical` the p-value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["quantity", "closed_form", "empirical", "std_error", "z", "pass", "finite_variance"])
            .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.name.clone(),
                format_g(r.closed_form),
                format_g(r.empirical),
                format_g(r.std_error),
                format_g(r.z),
                r.pass.to_string(),
                r.finite_variance.to_string(),
            ])
            .map_err(io)?;
        }
        w.write_record([
            "marginal_ks_pvalue".to_string(),
            format_g(KS_LEVEL),
            format_g(self.ks.p_value),
            String::new(),
            String::new(),
            self.ks.pass.to_string(),
            "true".to_string(),
        ])
        .map_err(io)?;
        w.flush()?;
        Ok(())
    }
}

fn batch_count(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(2)
}

/// Thinning stride after which consecutive kept values are (nearly) independent.
///
/// Kundu paths are 1-dependent, so stride 2 is exact. An A-M value still
/// depends on the value `k` steps back only if the carried arm won all `k`
/// maxima, which has probability about `(1 - delta/alpha)^k`; the stride
/// pushes that below `1e-4`.
pub fn independence_stride(process: &Process) -> usize {
    match process.am_params() {
        None => 2,
        Some(a) => {
            let keep = 1.0 - a.delta() / a.alpha();
            ((1e-4f64).ln() / keep.ln()).ceil().max(1.0) as usize
        }
    }
}

// Per-batch additive totals.
const N: usize = 0;
const SUM: usize = 1;
const SUM2: usize = 2;
const PAIRS: usize = 3;
const PROD: usize = 4;
const UP: usize = 5;
const DOWN: usize = 6;
const TIE: usize = 7;
const WIDTH: usize = 8;

fn batch_totals(values: &[f64], batches: usize) -> Vec<Vec<f64>> {
    let n = values.len();
    (0..batches)
        .map(|b| {
            let (lo, hi) = (b * n / batches, (b + 1) * n / batches);
            let mut t = vec![0.0; WIDTH];
            for i in lo..hi {
                let z = values[i];
                t[N] += 1.0;
                t[SUM] += z;
                t[SUM2] += z * z;
                if let Some(&next) = values.get(i + 1) {
                    t[PAIRS] += 1.0;
                    t[PROD] += z * next;
                    if z < next {
                        t[UP] += 1.0;
                    } else if z > next {
                        t[DOWN] += 1.0;
                    } else {
                        t[TIE] += 1.0;
                    }
                }
            }
            t
        })
        .collect()
}

fn stat_mean(t: &[f64]) -> f64 {
    t[SUM] / t[N]
}

fn stat_var(t: &[f64]) -> f64 {
    let m = stat_mean(t);
    (t[SUM2] / t[N] - m * m) * t[N] / (t[N] - 1.0)
}

fn stat_prod(t: &[f64]) -> f64 {
    t[PROD] / t[PAIRS]
}

fn stat_corr(t: &[f64]) -> f64 {
    let m = stat_mean(t);
    (stat_prod(t) - m * m) / stat_var(t)
}

/// Which moments behind the jackknife standard errors are finite.
struct SummandTails {
    second: bool,
    fourth: bool,
    product_square: bool,
}

impl SummandTails {
    fn of(process: &Process) -> Self {
        if process.sigma().is_none() {
            return SummandTails { second: true, fourth: true, product_square: true };
        }
        let s = process.marginal_shape();
        let product_square = match (process.kundu_params(), process.am_params()) {
            (Some(k), _) => kundu_product_terms(k.alpha(), k.beta(), -2.0).is_some(),
            (_, Some(a)) => am_product_terms(a.alpha(), a.delta(), -2.0).is_some(),
            _ => unreachable!("every process is Kundu or A-M"),
        };
        SummandTails { second: s > 2.0, fourth: s > 4.0, product_square }
    }
}

/// Compare every closed form of `process` with its empirical counterpart
/// on one simulated path of `path_length` steps.
pub fn empirical_check(process: &Process, path_length: usize, seed: u64) -> Result<ValidationReport> {
    if path_length < MIN_CHECK_LENGTH {
        return Err(Error::usage(format!(
            "empirical check needs a path length of at least {MIN_CHECK_LENGTH}, got {path_length}"
        )));
    }
    let path = ProcessSpec::new(*process, path_length, seed)?.generate();
    let values = &path.values;
    let n = values.len();
    let floor = 1.0 / n as f64;
    let groups = batch_totals(values, batch_count(n));
    let moments = theoretical_moments(process);
    let moves = move_probabilities(process);

    let mut rows = Vec::new();
    let mut notes = moments.notes.clone();
    let tails = SummandTails::of(process);
    let mut push = |name: &str, closed: Option<f64>, finite: bool, stat: &dyn Fn(&[f64]) -> f64| match closed {
        Some(c) => {
            let (est, se) = grouped_jackknife(&groups, stat);
            if !finite {
                notes.push(format!("{name}: summands have infinite variance, z is not calibrated"));
            }
            rows.push(ValidationRow::new(name, c, est, se, floor, finite));
        }
        None => notes.push(format!("{name}: skipped, closed form does not exist")),
    };
    push("mean", moments.mean, tails.second, &stat_mean);
    push("variance", moments.variance, tails.fourth, &stat_var);
    push("lag1_product_moment", moments.cross_moment, tails.product_square, &stat_prod);
    push("lag1_correlation", moments.lag1_corr, tails.fourth && tails.product_square, &stat_corr);
    push("up_fraction", Some(moves.up), true, &|t| t[UP] / t[PAIRS]);
    push("down_fraction", Some(moves.down), true, &|t| t[DOWN] / t[PAIRS]);
    push("tie_fraction", Some(moves.tie), true, &|t| t[TIE] / t[PAIRS]);

    let stride = independence_stride(process);
    let mut thin: Vec<f64> = values.iter().step_by(stride).copied().collect();
    let marginal = process.marginal();
    let statistic = ks_statistic(&mut thin, |x| marginal.cdf(x));
    let p_value = kolmogorov_pvalue(statistic, thin.len());
    Ok(ValidationReport {
        process: *process,
        path_length,
        seed,
        rows,
        ks: KsCheck {
            statistic,
            p_value,
            sample_size: thin.len(),
            stride,
            pass: p_value > KS_LEVEL,
        },
        notes,
    })
}

/// Empirical lag-1 joint CDF at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointCell {
    pub earlier: f64,
    pub later: f64,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub z: f64,
    pub pass: bool,
}

/// Frequency of `{Z_{n-1} <= earlier, Z_n <= later}` over the consecutive
/// pairs of the path described by `spec`, next to [`joint_cdf`].
pub fn empirical_joint_cdf(spec: &ProcessSpec, grid: &[(f64, f64)]) -> Result<Vec<JointCell>> {
    if grid.is_empty() {
        return Err(Error::usage("joint CDF grid is empty"));
    }
    if spec.length < MIN_JOINT_PAIRS {
        return Err(Error::usage(format!(
            "joint CDF check needs at least {MIN_JOINT_PAIRS} pairs, got {}",
            spec.length
        )));
    }
    let values = spec.generate().values;
    let pairs = values.len() - 1;
    let batches = batch_count(pairs);
    let width = grid.len() + 1;
    let groups: Vec<Vec<f64>> = (0..batches)
        .map(|b| {
            let (lo, hi) = (b * pairs / batches, (b + 1) * pairs / batches);
            let mut t = vec![0.0; width];
            for w in values[lo..=hi].windows(2) {
                for (k, &(a, c)) in grid.iter().enumerate() {
                    if w[0] <= a && w[1] <= c {
                        t[k] += 1.0;
                    }
                }
                t[grid.len()] += 1.0;
            }
            t
        })
        .collect();
    let floor = 1.0 / pairs as f64;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(k, &(earlier, later))| {
            let (empirical, se) = grouped_jackknife(&groups, |t| t[k] / t[grid.len()]);
            let closed_form = joint_cdf(&spec.process, earlier, later);
            let std_error = se.max(floor);
            let z = (empirical - closed_form) / std_error;
            JointCell {
                earlier,
                later,
                closed_form,
                empirical,
                std_error,
                z,
                pass: z.abs() <= Z_LIMIT,
            }
        })
        .collect())
}

/// Grid of marginal quantiles `(q_i, q_j)` at probabilities `k / (points + 1)`.
pub fn quantile_grid(process: &Process, points: usize) -> Vec<(f64, f64)> {
    let m = process.marginal();
    let qs: Vec<f64> = (1..=points)
        .map(|k| m.quantile(k as f64 / (points + 1) as f64).expect("probability in (0, 1)"))
        .collect();
    qs.iter().flat_map(|&a| qs.iter().map(move |&b| (a, b))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub process: Process,
    /// Path sizes `m` (number of steps), strictly ascending.
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
}

impl StudyConfig {
    pub fn new(process: Process, sizes: Vec<usize>, replicates: usize, seed: u64) -> Result<Self> {
        if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(format!("sizes must be positive and strictly ascending, got {sizes:?}")));
        }
        if replicates < 2 {
            return Err(Error::domain(format!("need at least 2 replicates, got {replicates}")));
        }
        Ok(StudyConfig { process, sizes, replicates, seed })
    }

    /// Seed of replicate `r` at size index `i`; distinct for every cell and replicate.
    pub fn replicate_seed(&self, size_index: usize, replicate: usize) -> u64 {
        derive_seed(self.seed, (size_index * self.replicates + replicate) as u64)
    }
}

/// Sampling distribution of one parameter estimate at one path size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub size: usize,
    pub parameter: String,
    pub truth: f64,
    /// Replicates that produced a valid estimate.
    pub estimates: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub q025: Option<f64>,
    pub median: Option<f64>,
    pub q975: Option<f64>,
    /// Replicates whose estimate was invalid or raised an error.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub cells: Vec<StudyCell>,
}

impl StudyReport {
    pub fn cell(&self, size: usize, parameter: &str) -> Option<&StudyCell> {
        self.cells.iter().find(|c| c.size == size && c.parameter == parameter)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record([
            "size", "parameter", "truth", "estimates", "mean", "sd", "q025", "median", "q975", "failures",
        ])
        .map_err(io)?;
        let opt = |v: Option<f64>| v.map(format_g).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                c.size.to_string(),
                c.parameter.clone(),
                format_g(c.truth),
                c.estimates.to_string(),
                opt(c.mean),
                opt(c.sd),
                opt(c.q025),
                opt(c.median),
                opt(c.q975),
                c.failures.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn true_parameters(process: &Process) -> Vec<(&'static str, f64)> {
    let mut rows = vec![("alpha", process.alpha()), (process.kind().second_param(), process.second())];
    if let Some(s) = process.sigma() {
        rows.push(("sigma", s));
    }
    rows
}

/// Estimate the parameters on `replicates` independent paths at every size.
///
/// Replicates run in parallel; each writes its own result slot, so the
/// report does not depend on scheduling.
pub fn simulation_study(config: &StudyConfig) -> StudyReport {
    let truth = true_parameters(&config.process);
    let mut cells = Vec::new();
    for (i, &size) in config.sizes.iter().enumerate() {
        let results: Vec<Option<Vec<f64>>> = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let spec = ProcessSpec { process: config.process, length: size, seed: config.replicate_seed(i, r) };
                let stats = summarize(&spec.generate().values).ok()?;
                let e = estimate(config.process.kind(), &stats).ok()?;
                e.valid.then(|| e.parameters().into_iter().map(|(_, v)| v).collect())
            })
            .collect();
        let ok: Vec<&Vec<f64>> = results.iter().flatten().collect();
        let failures = config.replicates - ok.len();
        for (k, &(name, value)) in truth.iter().enumerate() {
            let mut xs: Vec<f64> = ok.iter().map(|v| v[k]).collect();
            xs.sort_by(f64::total_cmp);
            let q = |p: f64| (!xs.is_empty()).then(|| quantile_sorted(&xs, p));
            cells.push(StudyCell {
                size,
                parameter: name.to_string(),
                truth: value,
                estimates: xs.len(),
                mean: (!xs.is_empty()).then(|| crate::stats::mean(&xs)),
                sd: (xs.len() >= 2).then(|| sample_sd(&xs)),
                q025: q(0.025),
                median: q(0.5),
                q975: q(0.975),
                failures,
            });
        }
    }
    StudyReport { config: config.clone(), cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::ProcessKind;

    #[test]
    fn check_is_deterministic() {
        let p = Process::new(ProcessKind::AmCpfd, 1.0, 0.5, None).unwrap();
        let a = empirical_check(&p, 20_000, 3).unwrap();
        let b = empirical_check(&p, 20_000, 3).unwrap();
        assert_eq!(a, b);
        assert!(empirical_check(&p, 100, 3).is_err());
    }

    #[test]
    fn joint_grid_edges() {
        let p = Process::new(ProcessKind::KunduCpfd, 1.0, 1.0, None).unwrap();
        let spec = ProcessSpec::new(p, MIN_JOINT_PAIRS, 5).unwrap();
        let cells = empirical_joint_cdf(&spec, &[(1.0, 1.0), (0.0, 0.5), (-1.0, -1.0)]).unwrap();
        assert_eq!(cells[0].empirical, 1.0);
        assert_eq!(cells[1].empirical, 0.0);
        assert_eq!(cells[2].empirical, 0.0);
        assert!(cells.iter().all(|c| c.pass));
        assert!(empirical_joint_cdf(&spec, &[]).is_err());
        let short = ProcessSpec::new(p, 1000, 5).unwrap();
        assert!(empirical_joint_cdf(&short, &[(0.5, 0.5)]).is_err());
    }

    #[test]
    fn minimal_study() {
        let p = Process::new(ProcessKind::KunduPareto, 1.0, 2.0, Some(1.0)).unwrap();
        let cfg = StudyConfig::new(p, vec![20, 30], 2, 9).unwrap();
        let r = simulation_study(&cfg);
        assert_eq!(r.cells.len(), 6);
        assert!(r.cells.iter().all(|c| c.estimates + c.failures == 2));
        assert!(StudyConfig::new(p, vec![30, 20], 5, 1).is_err());
        assert!(StudyConfig::new(p, vec![20], 1, 1).is_err());
    }

    #[test]
    fn replicate_seeds_are_distinct() {
        let p = Process::new(ProcessKind::AmCpfd, 1.0, 0.1, None).unwrap();
        let cfg = StudyConfig::new(p, vec![20, 30, 50], 500, 1).unwrap();
        let mut seeds: Vec<u64> = (0..3).flat_map(|i| (0..500).map(move |r| (i, r))).map(|(i, r)| cfg.replicate_seed(i, r)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 1500);
    }

    #[test]
    fn study_ignores_thread_count() {
        let p = Process::new(ProcessKind::AmCpfd, 1.0, 0.1, None).unwrap();
        let cfg = StudyConfig::new(p, vec![20, 50], 64, 11).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        assert_eq!(one.install(|| simulation_study(&cfg)), four.install(|| simulation_study(&cfg)));
    }

    #[test]
    fn stride_values() {
        let k = Process::new(ProcessKind::KunduCpfd, 0.5, 0.1, None).unwrap();
        assert_eq!(independence_stride(&k), 2);
        let a = Process::new(ProcessKind::AmPareto, 4.0, 2.0, Some(1.0)).unwrap();
        assert_eq!(independence_stride(&a), 14);
    }
}
