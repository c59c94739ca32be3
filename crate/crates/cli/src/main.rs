use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use phproc::analytics::{crossing_prob, move_probabilities, theoretical_moments};
use phproc::corrections::audit;
use phproc::fitting::{fit_with, load_series, Column, Transform};
use phproc::inference::{estimate, summarize, Estimate};
use phproc::montecarlo::{empirical_check, simulation_study, StudyConfig};
use phproc::numfmt::{format_g, round_sig};
use phproc::{transform_marginal, Baseline, Error, Family, Process, ProcessKind, ProcessSpec, TransformDirection};

const OUTPUT_DIR_ENV: &str = "PHPROC_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "phproc", version, about = "Simulate, analyse and fit minification processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sample path as `index,value` rows.
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        seed: u64,
        /// Baseline law for a hazard transform, `pareto:<sigma>` or `exponential:<rate>`.
        #[arg(long, value_parser = parse_baseline)]
        baseline: Option<Baseline>,
        /// Transform direction; defaults to `ph` for CPFD kinds and `prh` for PFD kinds.
        #[arg(long, requires = "baseline")]
        transform: Option<DirectionArg>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed-form moments and crossing probabilities.
    #[command(allow_negative_numbers = true)]
    Moments {
        #[command(flatten)]
        process: ProcessArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Method-of-moments estimate from a CSV column.
    Estimate {
        #[arg(long, value_parser = parse_kind)]
        kind: ProcessKind,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sampling distribution of the estimators over replicate paths.
    #[command(allow_negative_numbers = true)]
    Bootstrap {
        #[command(flatten)]
        process: ProcessArgs,
        /// Comma-separated path sizes, strictly ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        replicates: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit a process to a CSV column and report the CDF-space MSE.
    Fit {
        #[arg(long, value_parser = parse_kind)]
        kind: ProcessKind,
        #[command(flatten)]
        input: InputArgs,
        /// Rank transform applied before fitting PFD and CPFD kinds.
        #[arg(long, default_value = "ecdf", value_parser = parse_transform)]
        transform: Transform,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare closed forms with a simulated path, or run the formula audit.
    #[command(allow_negative_numbers = true)]
    Validate {
        #[arg(long, value_parser = parse_kind, required_unless_present = "corrections")]
        kind: Option<ProcessKind>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, conflicts_with = "delta")]
        beta: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Audit stated formulas against their corrections instead.
        #[arg(long, conflicts_with = "kind")]
        corrections: bool,
        #[arg(long, default_value_t = 1_000_000)]
        length: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct ProcessArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: ProcessKind,
    #[arg(long)]
    alpha: f64,
    /// Second shape of Kundu kinds.
    #[arg(long, conflicts_with = "delta")]
    beta: Option<f64>,
    /// Second shape of A-M kinds.
    #[arg(long)]
    delta: Option<f64>,
    /// Scale of Pareto kinds.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Column name or zero-based index; the last column by default.
    #[arg(long)]
    column: Option<String>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file, written atomically; relative paths resolve against
    /// `$PHPROC_OUTPUT_DIR` when set. Standard output by default.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    /// Only for `validate --corrections`.
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Ph,
    Prh,
}

fn parse_kind(s: &str) -> Result<ProcessKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_baseline(s: &str) -> Result<Baseline, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_transform(s: &str) -> Result<Transform, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(_) => Failure::Usage(e.to_string()),
            other => Failure::Domain(other.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn build_process(
    kind: ProcessKind,
    alpha: Option<f64>,
    beta: Option<f64>,
    delta: Option<f64>,
    sigma: Option<f64>,
) -> Outcome<Process> {
    let alpha = alpha.ok_or_else(|| Failure::Usage("--alpha is required".into()))?;
    let second = if kind.is_kundu() {
        if delta.is_some() {
            return Err(Failure::Usage(format!("{kind} takes --beta, not --delta")));
        }
        beta.ok_or_else(|| Failure::Usage(format!("{kind} requires --beta")))?
    } else {
        if beta.is_some() {
            return Err(Failure::Usage(format!("{kind} takes --delta, not --beta")));
        }
        delta.ok_or_else(|| Failure::Usage(format!("{kind} requires --delta")))?
    };
    match (kind.is_pareto(), sigma) {
        (true, None) => return Err(Failure::Usage(format!("{kind} requires --sigma"))),
        (false, Some(_)) => return Err(Failure::Usage(format!("{kind} does not take --sigma"))),
        _ => {}
    }
    Ok(Process::new(kind, alpha, second, sigma)?)
}

impl ProcessArgs {
    fn process(&self) -> Outcome<Process> {
        build_process(self.kind, Some(self.alpha), self.beta, self.delta, self.sigma)
    }
}

impl InputArgs {
    fn column(&self) -> Outcome<Column> {
        Ok(match &self.column {
            Some(c) => c.parse()?,
            None => Column::Last,
        })
    }
}

/// Round every float in a JSON tree to the printed precision.
fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = x;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

fn to_json<T: Serialize>(value: &T) -> Outcome<Vec<u8>> {
    let mut v = serde_json::to_value(value).map_err(|e| Failure::Domain(e.to_string()))?;
    round_json(&mut v);
    let mut out = serde_json::to_vec_pretty(&v).map_err(|e| Failure::Domain(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn csv_rows(header: [&str; 2], rows: &[(String, String)]) -> Vec<u8> {
    let mut out = format!("{},{}\n", header[0], header[1]);
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out.into_bytes()
}

fn opt(v: Option<f64>) -> String {
    v.map(format_g).unwrap_or_default()
}

fn resolve_output(path: &FsPath) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Temporary files are created private; give the result the target's
/// mode, or 0644 for a new file.
#[cfg(unix)]
fn match_permissions(tmp: &std::fs::File, target: &FsPath) -> std::io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    let mode = std::fs::metadata(target)
        .map(|m| m.permissions())
        .unwrap_or_else(|_| std::fs::Permissions::from_mode(0o644));
    tmp.set_permissions(mode)
}

#[cfg(not(unix))]
fn match_permissions(_: &std::fs::File, _: &FsPath) -> std::io::Result<()> {
    Ok(())
}

/// Write to a temporary file next to the target, then rename over it.
fn emit(output: &OutputArgs, bytes: &[u8]) -> Outcome<()> {
    let io = |e: std::io::Error| Failure::Domain(format!("i/o error: {e}"));
    match &output.output {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(io)
        }
        Some(path) => {
            let path = resolve_output(path);
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
                _ => PathBuf::from("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(&dir)
                .map_err(|e| Failure::Domain(format!("cannot write to {}: {e}", dir.display())))?;
            tmp.write_all(bytes).and_then(|_| tmp.flush()).map_err(io)?;
            match_permissions(tmp.as_file(), &path).map_err(io)?;
            tmp.persist(&path)
                .map_err(|e| Failure::Domain(format!("cannot write {}: {}", path.display(), e.error)))?;
            Ok(())
        }
    }
}

fn require_tabular(output: &OutputArgs) -> Outcome<()> {
    if output.format == Format::Markdown {
        return Err(Failure::Usage("--format markdown is only available with validate --corrections".into()));
    }
    Ok(())
}

fn estimate_rows(e: &Estimate) -> Vec<(String, String)> {
    let mut rows: Vec<(String, String)> =
        e.parameters().into_iter().map(|(k, v)| (k.to_string(), format_g(v))).collect();
    rows.push(("branch".into(), serde_json::to_value(e.branch).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()));
    rows.push(("valid".into(), e.valid.to_string()));
    rows
}

fn warn_invalid(e: &Estimate) {
    if !e.valid {
        eprintln!("warning: {} estimate is invalid: {}", e.kind, e.diagnostics.join("; "));
    }
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Simulate { process, length, seed, baseline, transform, output } => {
            require_tabular(&output)?;
            let p = process.process()?;
            let mut path = phproc::generate_path(&ProcessSpec::new(p, length, seed)?)?;
            if let Some(baseline) = baseline {
                let direction = match (transform, p.kind().family()) {
                    (Some(DirectionArg::Ph), _) => TransformDirection::Ph,
                    (Some(DirectionArg::Prh), _) => TransformDirection::Prh,
                    (None, Family::Cpfd) => TransformDirection::Ph,
                    (None, Family::Pfd) => TransformDirection::Prh,
                    (None, Family::Pareto) => {
                        return Err(Failure::Usage("--baseline needs a PFD or CPFD kind".into()));
                    }
                };
                path = transform_marginal(&path, &baseline, direction)?;
            }
            let bytes = match output.format {
                Format::Json => to_json(&path)?,
                _ => {
                    let mut buf = Vec::new();
                    path.write_csv(&mut buf)?;
                    buf
                }
            };
            emit(&output, &bytes)
        }
        Command::Moments { process, output } => {
            require_tabular(&output)?;
            let p = process.process()?;
            let report = theoretical_moments(&p);
            let crossing = crossing_prob(&p);
            let moves = move_probabilities(&p);
            let bytes = match output.format {
                Format::Json => to_json(&json!({
                    "moments": report,
                    "crossing": crossing,
                    "moves": moves,
                }))?,
                _ => {
                    let mut rows = vec![
                        ("mean".to_string(), opt(report.mean)),
                        ("variance".to_string(), opt(report.variance)),
                        ("lag1_product_moment".to_string(), opt(report.cross_moment)),
                        ("lag1_correlation".to_string(), opt(report.lag1_corr)),
                        ("crossing_probability".to_string(), format_g(crossing.probability)),
                        ("p_up".to_string(), format_g(moves.up)),
                        ("p_down".to_string(), format_g(moves.down)),
                        ("p_tie".to_string(), format_g(moves.tie)),
                    ];
                    if let Some(b) = report.breakdown {
                        for (k, v) in [("term_a", b.a), ("term_b", b.b), ("term_c", b.c), ("term_d", b.d)] {
                            rows.push((k.to_string(), format_g(v)));
                        }
                    }
                    csv_rows(["quantity", "value"], &rows)
                }
            };
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            emit(&output, &bytes)
        }
        Command::Estimate { kind, input, output } => {
            require_tabular(&output)?;
            let series = load_series(&input.input, &input.column()?)?;
            let stats = summarize(series.values())?;
            let est = estimate(kind, &stats)?;
            warn_invalid(&est);
            let bytes = match output.format {
                Format::Json => to_json(&json!({ "summary": stats, "estimate": est }))?,
                _ => csv_rows(["parameter", "estimate"], &estimate_rows(&est)),
            };
            emit(&output, &bytes)
        }
        Command::Bootstrap { process, sizes, replicates, seed, output } => {
            require_tabular(&output)?;
            let p = process.process()?;
            let report = simulation_study(&StudyConfig::new(p, sizes, replicates, seed)?);
            let bytes = match output.format {
                Format::Json => to_json(&report)?,
                _ => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    buf
                }
            };
            emit(&output, &bytes)
        }
        Command::Fit { kind, input, transform, output } => {
            require_tabular(&output)?;
            let series = load_series(&input.input, &input.column()?)?;
            let report = fit_with(&series, kind, transform)?;
            warn_invalid(&report.estimate);
            let bytes = match output.format {
                Format::Json => to_json(&report)?,
                _ => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    buf
                }
            };
            emit(&output, &bytes)
        }
        Command::Validate { kind, alpha, beta, delta, sigma, corrections, length, seed, output } => {
            if corrections {
                let a = audit(seed, length)?;
                let bytes = match output.format {
                    Format::Markdown => a.to_markdown().into_bytes(),
                    Format::Json => to_json(&a)?,
                    Format::Csv => {
                        let mut out = String::from("id,form,check,predicted,empirical,std_error,z,pass\n");
                        for c in &a.items {
                            for k in &c.checks {
                                let form = if k.form == phproc::corrections::Form::Stated { "stated" } else { "corrected" };
                                out.push_str(&format!(
                                    "{},{form},\"{}\",{},{},{},{},{}\n",
                                    c.id,
                                    k.label.replace('"', "\"\""),
                                    format_g(k.predicted),
                                    format_g(k.empirical),
                                    format_g(k.std_error),
                                    format_g(k.z),
                                    k.pass
                                ));
                            }
                        }
                        out.into_bytes()
                    }
                };
                return emit(&output, &bytes);
            }
            require_tabular(&output)?;
            let kind = kind.ok_or_else(|| Failure::Usage("--kind is required".into()))?;
            let p = build_process(kind, alpha, beta, delta, sigma)?;
            let report = empirical_check(&p, length, seed)?;
            let bytes = match output.format {
                Format::Json => to_json(&report)?,
                _ => {
                    let mut buf = Vec::new();
                    report.write_csv(&mut buf)?;
                    buf
                }
            };
            emit(&output, &bytes)?;
            if !report.all_pass() {
                eprintln!("warning: some checks exceeded the z limit");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => Cli::command().error(ErrorKind::ArgumentConflict, msg).exit(),
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {}", msg.lines().next().unwrap_or_default());
            ExitCode::from(1)
        }
    }
}
