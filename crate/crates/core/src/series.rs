//! Indexed numeric series with a finite-sample reading of their limit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitFlag {
    ConvergingToZero,
    ConvergingToPositive,
    Inconclusive,
}

impl LimitFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ConvergingToZero => "converging-to-zero",
            Self::ConvergingToPositive => "converging-to-positive",
            Self::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for LimitFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of the limit-flag decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    /// `ε₀ = zero_rel · (|first value| + 1)`.
    pub zero_rel: f64,
    /// Relative agreement of the last three values for a positive limit.
    pub agree_rel: f64,
    /// Fraction of the schedule treated as the tail.
    pub tail_fraction: f64,
    /// A fitted limit below `extrapolation_ratio · last value` reads as zero.
    pub extrapolation_ratio: f64,
}

impl Default for DecisionRule {
    fn default() -> Self {
        Self {
            zero_rel: 1e-6,
            agree_rel: 1e-6,
            tail_fraction: 0.5,
            extrapolation_ratio: 1e-2,
        }
    }
}

/// Tail fit `value ≈ limit + amplitude · index^(−beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub beta: f64,
    pub amplitude: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub rule: DecisionRule,
    pub epsilon0: f64,
    pub fit: Option<TailFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSeries {
    pub index_name: String,
    /// `(index, value)`; an infinite value is serialized as `null`.
    pub entries: Vec<(f64, f64)>,
    pub flag: LimitFlag,
    pub metadata: SeriesMetadata,
}

impl DiagnosticSeries {
    pub fn new(index_name: &str, entries: Vec<(f64, f64)>) -> Self {
        Self::with_rule(index_name, entries, DecisionRule::default())
    }

    pub fn with_rule(index_name: &str, entries: Vec<(f64, f64)>, rule: DecisionRule) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0), "indices must increase");
        let (flag, epsilon0, fit) = classify(&entries, &rule);
        Self {
            index_name: index_name.to_string(),
            entries,
            flag,
            metadata: SeriesMetadata { rule, epsilon0, fit },
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.1)
    }

    pub fn last_value(&self) -> Option<f64> {
        self.entries.last().map(|e| e.1)
    }

    /// Minimum over the tail (same tail as the decision rule).
    pub fn tail_min(&self) -> Option<f64> {
        let tail = tail_start(self.entries.len(), self.metadata.rule.tail_fraction);
        self.entries[tail..].iter().map(|e| e.1).reduce(f64::min)
    }

    /// CSV with header `<index>,value,flag`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},value,flag\n", self.index_name);
        for &(i, v) in &self.entries {
            let _ = writeln!(out, "{},{},{}", i, v, self.flag);
        }
        out
    }
}

fn tail_start(len: usize, fraction: f64) -> usize {
    let tail_len = ((len as f64 * fraction).ceil() as usize).max(3).min(len);
    len - tail_len
}

fn classify(entries: &[(f64, f64)], rule: &DecisionRule) -> (LimitFlag, f64, Option<TailFit>) {
    let Some(&(_, first)) = entries.first() else {
        return (LimitFlag::Inconclusive, rule.zero_rel, None);
    };
    let eps0 = rule.zero_rel * (first.abs() + 1.0);
    let len = entries.len();
    let tail = &entries[tail_start(len, rule.tail_fraction)..];
    if tail.iter().any(|e| !e.1.is_finite()) {
        return (LimitFlag::Inconclusive, eps0, None);
    }
    let last = tail[tail.len() - 1].1;
    // values below ε₀ read as 0, so rounding noise does not break monotonicity
    let floor = |v: f64| if v.abs() < eps0 { 0.0 } else { v.abs() };
    let nonincreasing = tail.windows(2).all(|w| floor(w[1].1) <= floor(w[0].1));
    if last.abs() < eps0 && nonincreasing {
        return (LimitFlag::ConvergingToZero, eps0, None);
    }
    if len >= 3 {
        let l3 = &entries[len - 3..];
        let scale = last.abs();
        let agree = l3.iter().all(|e| (e.1 - last).abs() <= rule.agree_rel * scale);
        if agree && scale > eps0 {
            return (LimitFlag::ConvergingToPositive, eps0, None);
        }
    }
    let fit = fit_tail(tail);
    if let Some(f) = fit {
        let strictly_decreasing = tail.windows(2).all(|w| w[1].1 < w[0].1);
        if strictly_decreasing && last > 0.0 && f.limit.abs() <= rule.extrapolation_ratio * last {
            return (LimitFlag::ConvergingToZero, eps0, fit);
        }
    }
    (LimitFlag::Inconclusive, eps0, fit)
}

/// Log-log regression of successive differences gives `beta`; the limit and
/// amplitude then come from least squares of the values on `index^(−beta)`.
fn fit_tail(tail: &[(f64, f64)]) -> Option<TailFit> {
    if tail.len() < 3 {
        return None;
    }
    let diffs: Vec<(f64, f64)> = tail
        .windows(2)
        .map(|w| (w[0].0, w[1].1 - w[0].1))
        .collect();
    if diffs.iter().any(|d| d.1 == 0.0 || !d.1.is_finite() || d.0 <= 0.0) {
        return None;
    }
    let sign = diffs[0].1.signum();
    if diffs.iter().any(|d| d.1.signum() != sign) {
        return None;
    }
    let pts: Vec<(f64, f64)> = diffs.iter().map(|d| (d.0.ln(), d.1.abs().ln())).collect();
    let slope = regression_slope(&pts)?;
    let beta = -slope;
    if !(beta > 0.0) {
        return None;
    }
    let xs: Vec<(f64, f64)> = tail.iter().map(|&(j, v)| (j.powf(-beta), v)).collect();
    let amplitude = regression_slope(&xs)?;
    let n = xs.len() as f64;
    let mx = xs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xs.iter().map(|p| p.1).sum::<f64>() / n;
    Some(TailFit {
        beta,
        amplitude,
        limit: my - amplitude * mx,
    })
}

fn regression_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
