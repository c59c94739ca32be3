//! Small statistical helpers shared by the estimators and the Monte-Carlo oracle.

use std::cmp::Ordering;

/// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and `cdf`.
/// Sorts `sample` in place.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value `P(D_n >= d)` with Stephens' small-sample correction.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    1.0 - kolmogorov_cdf(lambda)
}

/// CDF of the Kolmogorov distribution, `P(K <= x)`.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.18 {
        // Jacobi-theta form converges fast for small x.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut sum = 0.0;
        for j in 1..=20 {
            let k = (2 * j - 1) as f64;
            sum += (-k * k * pi2 / (8.0 * x * x)).exp();
        }
        ((2.0 * std::f64::consts::PI).sqrt() / x * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * x * x).exp();
            sum += if j % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (1.0 - 2.0 * sum).clamp(0.0, 1.0)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the `n - 1` divisor.
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Linear-interpolation quantile of already sorted data (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Delete-one-group jackknife.
///
/// `groups[g]` holds additive per-group totals; `stat` maps a vector of
/// totals to the statistic. Returns `(estimate, standard_error)`. For a
/// statistic linear in the totals this is the batch-means standard error.
pub fn grouped_jackknife(groups: &[Vec<f64>], stat: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let width = groups[0].len();
    let mut total = vec![0.0; width];
    for g in groups {
        for (t, v) in total.iter_mut().zip(g) {
            *t += v;
        }
    }
    let full = stat(&total);
    let b = groups.len() as f64;
    let mut scratch = vec![0.0; width];
    let leave_out: Vec<f64> = groups
        .iter()
        .map(|g| {
            for ((s, t), v) in scratch.iter_mut().zip(&total).zip(g) {
                *s = t - v;
            }
            stat(&scratch)
        })
        .collect();
    let centre = mean(&leave_out);
    let var = (b - 1.0) / b * leave_out.iter().map(|x| (x - centre).powi(2)).sum::<f64>();
    (full, var.sqrt())
}
