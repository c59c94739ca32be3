//! Fitting the processes to an observed series.

use std::fmt;
use std::io::Write;
use std::path::Path as FsPath;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{estimate, summarize, Estimate};
use crate::numfmt::format_g;
use crate::processes::{Family, ProcessKind};

/// Minimum series length accepted by [`Series::new`].
pub const MIN_SERIES_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<f64>,
    label: String,
}

impl Series {
    pub fn new(values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.len() < MIN_SERIES_LEN {
            return Err(Error::Input(format!(
                "series needs at least {MIN_SERIES_LEN} values, got {}",
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Input(format!("value {i} is not finite: {v}")));
        }
        Ok(Series { values, label: label.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Column selector: a header name or a zero-based index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Name(String),
    Index(usize),
    /// The rightmost column.
    Last,
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::usage("empty column selector"));
        }
        Ok(s.parse::<usize>().map(Column::Index).unwrap_or_else(|_| Column::Name(s.to_string())))
    }
}

/// Read one numeric column of a CSV file. A header row is detected when the
/// selected field of the first row is not a number; selecting by name
/// requires one.
pub fn load_series(path: &FsPath, column: &Column) -> Result<Series> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(e).context(&path.display().to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let rows: Vec<csv::StringRecord> = reader
        .records()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let rows: Vec<(usize, csv::StringRecord)> = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| (i + 1, r))
        .filter(|(_, r)| !(r.len() == 1 && r[0].is_empty()))
        .collect();
    let Some((_, first)) = rows.first() else {
        return Err(Error::Input(format!("{}: file is empty", path.display())));
    };

    let (index, skip) = match column {
        Column::Name(name) => {
            let idx = first.iter().position(|h| h == name).ok_or_else(|| {
                Error::Input(format!("{}: no column named {name:?}", path.display()))
            })?;
            (idx, 1)
        }
        Column::Index(i) => {
            if *i >= first.len() {
                return Err(Error::Input(format!(
                    "{}: column {i} out of range ({} columns)",
                    path.display(),
                    first.len()
                )));
            }
            (*i, usize::from(first[*i].parse::<f64>().is_err()))
        }
        Column::Last => {
            let i = first.len() - 1;
            (i, usize::from(first[i].parse::<f64>().is_err()))
        }
    };

    let mut values = Vec::with_capacity(rows.len());
    let mut bad = Vec::new();
    for (line, row) in rows.iter().skip(skip) {
        match row.get(index).map(str::parse::<f64>) {
            Some(Ok(v)) if v.is_finite() => values.push(v),
            _ => bad.push(line.to_string()),
        }
    }
    if !bad.is_empty() {
        let shown: Vec<&str> = bad.iter().take(10).map(String::as_str).collect();
        let more = if bad.len() > 10 { format!(" and {} more", bad.len() - 10) } else { String::new() };
        return Err(Error::Input(format!(
            "{}: non-numeric value in column {index} on row(s) {}{more}",
            path.display(),
            shown.join(", ")
        )));
    }
    Series::new(values, path.display().to_string()).map_err(|e| e.context(&path.display().to_string()))
}

/// Average ranks (1-based) in ascending order.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Complementary empirical CDF: `x_i -> 1 - r_i/(m+1)`.
pub fn ecdf_transform(series: &Series) -> Series {
    let m = series.len() as f64;
    let values = average_ranks(series.values()).into_iter().map(|r| 1.0 - r / (m + 1.0)).collect();
    Series { values, label: format!("1-Fm({})", series.label) }
}

/// Order-preserving plotting positions: `x_i -> r_i/(m+1)`.
pub fn rank_transform(series: &Series) -> Series {
    let m = series.len() as f64;
    let values = average_ranks(series.values()).into_iter().map(|r| r / (m + 1.0)).collect();
    Series { values, label: format!("Fm({})", series.label) }
}

/// Map applied to the data before a PFD or CPFD fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// `r_i/(m+1)`: keeps the direction of every move.
    #[default]
    Ecdf,
    /// `1 - r_i/(m+1)`: reverses every move.
    ComplementaryEcdf,
    None,
}

impl Transform {
    pub fn as_str(self) -> &'static str {
        match self {
            Transform::Ecdf => "ecdf",
            Transform::ComplementaryEcdf => "complementary-ecdf",
            Transform::None => "none",
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ecdf" => Ok(Transform::Ecdf),
            "complementary" | "complementary-ecdf" => Ok(Transform::ComplementaryEcdf),
            "none" => Ok(Transform::None),
            other => Err(Error::usage(format!(
                "unknown transform {other:?} (expected ecdf, complementary-ecdf or none)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub kind: ProcessKind,
    pub estimate: Estimate,
    pub mse: f64,
    pub transform: Transform,
    pub length: usize,
}

impl FitReport {
    /// Two-column `parameter,estimate` table; MSE is the last row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["parameter", "estimate"]).map_err(err)?;
        for (name, v) in self.estimate.parameters() {
            w.write_record([name, &format_g(v)]).map_err(err)?;
        }
        w.write_record(["mse", &format_g(self.mse)]).map_err(err)?;
        w.flush()?;
        Ok(())
    }
}

/// Fit `kind` with the default transform.
pub fn fit(series: &Series, kind: ProcessKind) -> Result<FitReport> {
    fit_with(series, kind, Transform::default())
}

/// Fit `kind` to `series`. Unit-interval kinds are fitted to `transform(series)`;
/// Pareto kinds always use the raw values with `sigma` at the sample minimum.
pub fn fit_with(series: &Series, kind: ProcessKind, transform: Transform) -> Result<FitReport> {
    let (data, transform) = match kind.family() {
        Family::Cpfd | Family::Pfd => match transform {
            Transform::Ecdf => (rank_transform(series), transform),
            Transform::ComplementaryEcdf => (ecdf_transform(series), transform),
            Transform::None => (series.clone(), transform),
        },
        Family::Pareto => (series.clone(), Transform::None),
    };
    let ctx = format!("fitting {kind} to {}", series.label());
    let stats = summarize(data.values()).map_err(|e| e.context(&ctx))?;
    let est = estimate(kind, &stats).map_err(|e| e.context(&ctx))?;
    let marginal = est.process().map_err(|e| e.context(&ctx))?.marginal();

    let mut sorted = data.values().to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mse = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (marginal.cdf(x) - (i + 1) as f64 / (m + 1.0)).powi(2))
        .sum::<f64>()
        / m;

    Ok(FitReport { kind, estimate: est, mse, transform, length: series.len() })
}
