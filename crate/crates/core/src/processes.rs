//! Sample paths of the six stationary minification/maxification processes.
//!
//! Every process is driven by a latent sequence `L_n = -ln X_n` on the
//! exponential scale, where `X_n` is the underlying power-function (PFD)
//! process:
//!
//! * Kundu: `X_n = max{U_n^(1/alpha), U_{n-1}^(1/beta)}`, so
//!   `L_n = min{E_n / alpha, E_{n-1} / beta}` with `E = -ln U`.
//! * A-M: `Y_0 = U_0^(1/alpha)`, `Y_n = max{Y_{n-1}^(alpha/(alpha-delta)), U_n^(1/delta)}`,
//!   so `L_n = min{L_{n-1} * alpha/(alpha-delta), E_n / delta}`.
//!
//! The observed value is a monotone map of `L`: `exp(-L)` (PFD), `1 - exp(-L)`
//! (CPFD, evaluated with `expm1`), or `sigma * exp(L)` (Pareto). Hence the
//! CPFD and Pareto paths are exactly `1 - X` and `sigma / X` of the PFD path
//! built from the same uniforms.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::Marginal;
use crate::error::{require_positive, Error, Result};
use crate::numfmt::format_g;
use crate::rng::{derive_seed, SeededStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    KunduPfd,
    AmPfd,
    KunduCpfd,
    AmCpfd,
    KunduPareto,
    AmPareto,
}

/// Marginal family of a process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Pfd,
    Cpfd,
    Pareto,
}

impl ProcessKind {
    pub const ALL: [ProcessKind; 6] = [
        ProcessKind::KunduPfd,
        ProcessKind::AmPfd,
        ProcessKind::KunduCpfd,
        ProcessKind::AmCpfd,
        ProcessKind::KunduPareto,
        ProcessKind::AmPareto,
    ];

    pub fn is_kundu(self) -> bool {
        matches!(self, ProcessKind::KunduPfd | ProcessKind::KunduCpfd | ProcessKind::KunduPareto)
    }

    pub fn family(self) -> Family {
        match self {
            ProcessKind::KunduPfd | ProcessKind::AmPfd => Family::Pfd,
            ProcessKind::KunduCpfd | ProcessKind::AmCpfd => Family::Cpfd,
            ProcessKind::KunduPareto | ProcessKind::AmPareto => Family::Pareto,
        }
    }

    pub fn is_pareto(self) -> bool {
        self.family() == Family::Pareto
    }

    /// Name of the second shape parameter: `beta` for Kundu kinds, `delta` for A-M kinds.
    pub fn second_param(self) -> &'static str {
        if self.is_kundu() {
            "beta"
        } else {
            "delta"
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProcessKind::KunduPfd => "kundu-pfd",
            ProcessKind::AmPfd => "am-pfd",
            ProcessKind::KunduCpfd => "kundu-cpfd",
            ProcessKind::AmCpfd => "am-cpfd",
            ProcessKind::KunduPareto => "kundu-pareto",
            ProcessKind::AmPareto => "am-pareto",
        }
    }
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProcessKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::usage(format!("unknown process kind `{s}`")))
    }
}

/// Shape parameters of a Kundu process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KunduParams {
    alpha: f64,
    beta: f64,
}

impl KunduParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Ok(KunduParams {
            alpha: require_positive("alpha", alpha)?,
            beta: require_positive("beta", beta)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Shape of the stationary marginal, `alpha + beta`.
    pub fn total(&self) -> f64 {
        self.alpha + self.beta
    }
}

/// Shape parameters of an A-M process; requires `0 < delta < alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmParams {
    alpha: f64,
    delta: f64,
}

impl AmParams {
    pub fn new(alpha: f64, delta: f64) -> Result<Self> {
        require_positive("alpha", alpha)?;
        require_positive("delta", delta)?;
        if delta >= alpha {
            return Err(Error::domain(format!(
                "A-M processes need 0 < delta < alpha, got alpha={alpha}, delta={delta}"
            )));
        }
        Ok(AmParams { alpha, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Exponent `alpha / (alpha - delta)` applied to the carried-over value.
    pub fn carry_exponent(&self) -> f64 {
        self.alpha / (self.alpha - self.delta)
    }
}

/// A fully parameterised process. Kind and parameter set cannot disagree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProcessRecord", into = "ProcessRecord")]
pub enum Process {
    KunduPfd(KunduParams),
    AmPfd(AmParams),
    KunduCpfd(KunduParams),
    AmCpfd(AmParams),
    KunduPareto { sigma: f64, shape: KunduParams },
    AmPareto { sigma: f64, shape: AmParams },
}

impl Process {
    /// Build a process from flat parameters. `second` is `beta` for Kundu
    /// kinds and `delta` for A-M kinds; `sigma` must be given exactly for Pareto kinds.
    pub fn new(kind: ProcessKind, alpha: f64, second: f64, sigma: Option<f64>) -> Result<Self> {
        match (kind.is_pareto(), sigma) {
            (true, None) => return Err(Error::domain(format!("{kind} requires sigma"))),
            (false, Some(_)) => return Err(Error::domain(format!("{kind} takes no sigma"))),
            _ => {}
        }
        let sigma = sigma.map(|s| require_positive("sigma", s)).transpose()?;
        Ok(match kind {
            ProcessKind::KunduPfd => Process::KunduPfd(KunduParams::new(alpha, second)?),
            ProcessKind::AmPfd => Process::AmPfd(AmParams::new(alpha, second)?),
            ProcessKind::KunduCpfd => Process::KunduCpfd(KunduParams::new(alpha, second)?),
            ProcessKind::AmCpfd => Process::AmCpfd(AmParams::new(alpha, second)?),
            ProcessKind::KunduPareto => Process::KunduPareto {
                sigma: sigma.unwrap_or_default(),
                shape: KunduParams::new(alpha, second)?,
            },
            ProcessKind::AmPareto => Process::AmPareto {
                sigma: sigma.unwrap_or_default(),
                shape: AmParams::new(alpha, second)?,
            },
        })
    }

    pub fn kind(&self) -> ProcessKind {
        match self {
            Process::KunduPfd(_) => ProcessKind::KunduPfd,
            Process::AmPfd(_) => ProcessKind::AmPfd,
            Process::KunduCpfd(_) => ProcessKind::KunduCpfd,
            Process::AmCpfd(_) => ProcessKind::AmCpfd,
            Process::KunduPareto { .. } => ProcessKind::KunduPareto,
            Process::AmPareto { .. } => ProcessKind::AmPareto,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Process::KunduPfd(p) | Process::KunduCpfd(p) | Process::KunduPareto { shape: p, .. } => p.alpha,
            Process::AmPfd(p) | Process::AmCpfd(p) | Process::AmPareto { shape: p, .. } => p.alpha,
        }
    }

    /// `beta` for Kundu kinds, `delta` for A-M kinds.
    pub fn second(&self) -> f64 {
        match self {
            Process::KunduPfd(p) | Process::KunduCpfd(p) | Process::KunduPareto { shape: p, .. } => p.beta,
            Process::AmPfd(p) | Process::AmCpfd(p) | Process::AmPareto { shape: p, .. } => p.delta,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            Process::KunduPareto { sigma, .. } | Process::AmPareto { sigma, .. } => Some(*sigma),
            _ => None,
        }
    }

    pub fn kundu_params(&self) -> Option<KunduParams> {
        match self {
            Process::KunduPfd(p) | Process::KunduCpfd(p) | Process::KunduPareto { shape: p, .. } => Some(*p),
            _ => None,
        }
    }

    pub fn am_params(&self) -> Option<AmParams> {
        match self {
            Process::AmPfd(p) | Process::AmCpfd(p) | Process::AmPareto { shape: p, .. } => Some(*p),
            _ => None,
        }
    }

    /// Shape of the stationary marginal: `alpha + beta` (Kundu) or `alpha` (A-M).
    pub fn marginal_shape(&self) -> f64 {
        match self.kundu_params() {
            Some(k) => k.total(),
            None => self.alpha(),
        }
    }

    /// Stationary one-dimensional law.
    pub fn marginal(&self) -> Marginal {
        let shape = self.marginal_shape();
        let m = match self.kind().family() {
            Family::Pfd => Marginal::pfd(shape),
            Family::Cpfd => Marginal::cpfd(shape),
            Family::Pareto => Marginal::pareto(self.sigma().unwrap_or(1.0), shape),
        };
        m.expect("validated parameters give a valid marginal")
    }

    /// Observed value for latent `L = -ln X`.
    pub(crate) fn from_latent(&self, latent: f64) -> f64 {
        match self.kind().family() {
            Family::Pfd => (-latent).exp(),
            Family::Cpfd => -(-latent).exp_m1(),
            Family::Pareto => self.sigma().unwrap_or(1.0) * latent.exp(),
        }
    }

    /// Inverse of [`Process::from_latent`]; errors outside the open support.
    pub(crate) fn to_latent(&self, value: f64) -> Result<f64> {
        let (lo, hi) = self.marginal().support();
        if !(value > lo && value < hi) {
            return Err(Error::domain(format!(
                "value {value} lies outside the support ({lo}, {hi}) of {}",
                self.kind()
            )));
        }
        Ok(match self.kind().family() {
            Family::Pfd => -value.ln(),
            Family::Cpfd => -(-value).ln_1p(),
            Family::Pareto => (value / self.sigma().unwrap_or(1.0)).ln(),
        })
    }

    /// Advance the process by one index.
    ///
    /// Kundu kinds take `uniforms = [u_prev, u_cur]` (the uniforms at indices
    /// `n-1` and `n`) and ignore `prev`. A-M kinds take `uniforms = [u_n]` and
    /// need the previous value, which must lie inside the open support.
    ///
    /// The A-M Pareto step is the reciprocal image of the A-M PFD step:
    /// `sigma / max{(sigma/prev)^(alpha/(alpha-delta)), u^(1/delta)}`.
    pub fn step(&self, prev: Option<f64>, uniforms: &[f64]) -> Result<f64> {
        for &u in uniforms {
            if !(u > 0.0 && u < 1.0) {
                return Err(Error::domain(format!("uniform variate must lie in (0, 1), got {u}")));
            }
        }
        let latent = match (self.kundu_params(), self.am_params()) {
            (Some(k), _) => {
                let [u_prev, u_cur] = uniforms else {
                    return Err(Error::usage(format!(
                        "{} step takes two uniforms, got {}",
                        self.kind(),
                        uniforms.len()
                    )));
                };
                (-u_cur.ln() / k.alpha).min(-u_prev.ln() / k.beta)
            }
            (None, Some(a)) => {
                let [u] = uniforms else {
                    return Err(Error::usage(format!(
                        "{} step takes one uniform, got {}",
                        self.kind(),
                        uniforms.len()
                    )));
                };
                let prev = prev.ok_or_else(|| {
                    Error::usage(format!("{} step needs the previous value", self.kind()))
                })?;
                let carried = self.to_latent(prev)? * a.carry_exponent();
                carried.min(-u.ln() / a.delta)
            }
            (None, None) => unreachable!("every process is Kundu or A-M"),
        };
        Ok(self.from_latent(latent))
    }

    /// Generate the values at indices `0..=length` from `stream`.
    pub fn sample_path(&self, length: usize, stream: &mut SeededStream) -> Vec<f64> {
        let mut out = Vec::with_capacity(length + 1);
        if let Some(k) = self.kundu_params() {
            // The extra leading draw plays the role of U_{-1}, so index 0 is already stationary.
            let mut e_prev = stream.next_exponential();
            for _ in 0..=length {
                let e_cur = stream.next_exponential();
                out.push(self.from_latent((e_cur / k.alpha).min(e_prev / k.beta)));
                e_prev = e_cur;
            }
        } else if let Some(a) = self.am_params() {
            let carry = a.carry_exponent();
            let mut latent = stream.next_exponential() / a.alpha;
            out.push(self.from_latent(latent));
            for _ in 0..length {
                latent = (latent * carry).min(stream.next_exponential() / a.delta);
                out.push(self.from_latent(latent));
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct ProcessRecord {
    kind: ProcessKind,
    alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
}

impl From<Process> for ProcessRecord {
    fn from(p: Process) -> Self {
        let kundu = p.kind().is_kundu();
        ProcessRecord {
            kind: p.kind(),
            alpha: p.alpha(),
            beta: kundu.then(|| p.second()),
            delta: (!kundu).then(|| p.second()),
            sigma: p.sigma(),
        }
    }
}

impl TryFrom<ProcessRecord> for Process {
    type Error = Error;

    fn try_from(r: ProcessRecord) -> Result<Self> {
        let second = if r.kind.is_kundu() { r.beta } else { r.delta };
        let second = second
            .ok_or_else(|| Error::domain(format!("{} requires {}", r.kind, r.kind.second_param())))?;
        Process::new(r.kind, r.alpha, second, r.sigma)
    }
}

/// A process together with path length and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub process: Process,
    /// Last index `m`; a path holds `m + 1` values.
    pub length: usize,
    pub seed: u64,
}

impl ProcessSpec {
    pub fn new(process: Process, length: usize, seed: u64) -> Result<Self> {
        if length == 0 {
            return Err(Error::domain("path length must be at least 1"));
        }
        Ok(ProcessSpec { process, length, seed })
    }

    /// The same spec with the seed of the `index`-th replicate (see [`derive_seed`]).
    pub fn replicate(&self, index: u64) -> Self {
        ProcessSpec { seed: derive_seed(self.seed, index), ..*self }
    }

    pub fn generate(&self) -> Path {
        let mut stream = SeededStream::new(self.seed);
        Path {
            values: self.process.sample_path(self.length, &mut stream),
            origin: Origin::Simulated(*self),
        }
    }
}

/// Simulate the path described by `spec`. Identical specs give identical paths.
pub fn generate_path(spec: &ProcessSpec) -> Result<Path> {
    if spec.length == 0 {
        return Err(Error::domain("path length must be at least 1"));
    }
    Ok(spec.generate())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformDirection {
    /// Proportional hazard: apply `F0^(-1)` to a CPFD path.
    Ph,
    /// Proportional reversed hazard: apply `F0^(-1)` to a PFD path.
    Prh,
}

/// Where a path came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum Origin {
    Simulated(ProcessSpec),
    Transformed {
        base: Option<ProcessSpec>,
        baseline: String,
        direction: TransformDirection,
    },
    External {
        label: String,
    },
}

/// An ordered realisation at indices `0..values.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub values: Vec<f64>,
    pub origin: Origin,
}

impl Path {
    pub fn external(values: Vec<f64>, label: impl Into<String>) -> Self {
        Path { values, origin: Origin::External { label: label.into() } }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spec(&self) -> Option<&ProcessSpec> {
        match &self.origin {
            Origin::Simulated(s) => Some(s),
            _ => None,
        }
    }

    /// `index,value` CSV, one row per index.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "value"]).map_err(csv_err)?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), format_g(*v)]).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Baseline law `F0` of a proportional (reversed) hazard family, given by
/// its survival function and quantile function.
#[derive(Clone)]
pub struct Baseline {
    name: String,
    survival: RealFn,
    quantile: RealFn,
    support: (f64, f64),
}

impl fmt::Debug for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Baseline")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish()
    }
}

impl Baseline {
    /// `survival` must be strictly decreasing on `support` and `quantile`
    /// must invert `1 - survival`.
    pub fn new(
        name: impl Into<String>,
        survival: impl Fn(f64) -> f64 + Send + Sync + 'static,
        quantile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
    ) -> Self {
        Baseline {
            name: name.into(),
            survival: Arc::new(survival),
            quantile: Arc::new(quantile),
            support,
        }
    }

    /// Unit-shape Pareto: `F0bar(x) = (x / sigma)^(-1)`, `F0^(-1)(y) = sigma / (1 - y)`.
    pub fn pareto(sigma: f64) -> Result<Self> {
        require_positive("sigma", sigma)?;
        Ok(Baseline::new(
            format!("pareto:{}", format_g(sigma)),
            move |x| if x <= sigma { 1.0 } else { sigma / x },
            move |y| sigma / (1.0 - y),
            (sigma, f64::INFINITY),
        ))
    }

    /// Exponential with the given rate: `F0bar(x) = exp(-rate x)`.
    pub fn exponential(rate: f64) -> Result<Self> {
        require_positive("rate", rate)?;
        Ok(Baseline::new(
            format!("exponential:{}", format_g(rate)),
            move |x| if x <= 0.0 { 1.0 } else { (-rate * x).exp() },
            move |y| -(-y).ln_1p() / rate,
            (0.0, f64::INFINITY),
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn survival(&self, x: f64) -> f64 {
        (self.survival)(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    pub fn quantile(&self, y: f64) -> f64 {
        (self.quantile)(y)
    }
}

impl FromStr for Baseline {
    type Err = Error;

    /// `pareto:<sigma>` or `exponential:<rate>`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::usage(format!("baseline must look like `pareto:<sigma>`, got `{s}`")))?;
        let value: f64 = arg
            .parse()
            .map_err(|_| Error::usage(format!("baseline parameter `{arg}` is not a number")))?;
        match name {
            "pareto" => Baseline::pareto(value),
            "exponential" => Baseline::exponential(value),
            _ => Err(Error::usage(format!("unknown baseline `{name}`"))),
        }
    }
}

/// Push a (0,1)-valued path through the baseline quantile `F0^(-1)`.
///
/// With [`TransformDirection::Ph`] a CPFD(`s`) path becomes a process whose
/// marginal survival is `F0bar(x)^s`; with [`TransformDirection::Prh`] a
/// PFD(`s`) path gets marginal CDF `F0(x)^s`. Simulated inputs must come from
/// the matching family. The map is increasing, so order statistics and the
/// up/down pattern carry over unchanged.
pub fn transform_marginal(path: &Path, baseline: &Baseline, direction: TransformDirection) -> Result<Path> {
    let base = path.spec().copied();
    if let Some(spec) = base {
        let family = spec.process.kind().family();
        let expected = match direction {
            TransformDirection::Ph => Family::Cpfd,
            TransformDirection::Prh => Family::Pfd,
        };
        if family != expected {
            return Err(Error::domain(format!(
                "{direction:?} transform expects a {expected:?} path, got {}",
                spec.process.kind()
            )));
        }
    }
    let values = path
        .values
        .iter()
        .map(|&v| {
            if v > 0.0 && v < 1.0 {
                Ok(baseline.quantile(v))
            } else {
                Err(Error::domain(format!("transform input {v} is not strictly inside (0, 1)")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Path {
        values,
        origin: Origin::Transformed { base, baseline: baseline.name().to_string(), direction },
    })
}
