//! Accuracy metrics, percentile bootstrap intervals and effect sizes.
//!
//! Relative-error metrics use `|Y − Ŷ| / Y`. Standardised Accuracy compares
//! MAR against the exact expected MAR of guessing another case's effort,
//! computed in closed form rather than by sampling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::CaseId;
use crate::exec::{map_range, Execution};

pub const DEFAULT_PRED_THRESHOLD: f64 = 25.0;
pub const DEFAULT_BOOTSTRAP_B: usize = 1000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
/// Smallest accepted number of bootstrap resamples.
pub const MIN_BOOTSTRAP_B: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("residual set is empty")]
    Empty,
    #[error("actual values must be positive")]
    NonPositiveActual,
    #[error("case '{0}' appears more than once")]
    DuplicateCase(CaseId),
    #[error("threshold must be positive")]
    InvalidThreshold,
    #[error("standardised accuracy needs at least two cases")]
    TooFewForSa,
    #[error("all efforts are equal; random-guess MAR is zero")]
    DegenerateBaseline,
    #[error("cohen's d needs n1 + n2 >= 3")]
    TooFewForEffect,
    #[error("bootstrap needs b >= {MIN_BOOTSTRAP_B}, got {0}")]
    TooFewResamples(usize),
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("bootstrap redraw budget exhausted")]
    RedrawBudget,
    #[error("unknown metric '{0}'")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub case_id: CaseId,
    pub actual: f64,
    pub predicted: f64,
    /// The predictor failed on this fold and the training mean was used.
    pub fallback: bool,
}

impl ResidualEntry {
    pub fn abs_residual(&self) -> f64 {
        (self.actual - self.predicted).abs()
    }

    pub fn mre(&self) -> f64 {
        self.abs_residual() / self.actual
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSet {
    pub entries: Vec<ResidualEntry>,
    pub predictor_label: String,
    pub dataset_label: String,
}

impl ResidualSet {
    pub fn new(entries: Vec<ResidualEntry>, predictor_label: impl Into<String>, dataset_label: impl Into<String>) -> Result<Self, MetricError> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if e.actual.is_nan() || e.actual <= 0.0 {
                return Err(MetricError::NonPositiveActual);
            }
            if !seen.insert(&e.case_id) {
                return Err(MetricError::DuplicateCase(e.case_id.clone()));
            }
        }
        Ok(ResidualSet { entries, predictor_label: predictor_label.into(), dataset_label: dataset_label.into() })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn fallbacks(&self) -> usize {
        self.entries.iter().filter(|e| e.fallback).count()
    }

    pub fn abs_residuals(&self) -> Vec<f64> {
        self.entries.iter().map(ResidualEntry::abs_residual).collect()
    }

    pub fn actuals(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.actual).collect()
    }
}

fn non_empty(entries: &[ResidualEntry]) -> Result<(), MetricError> {
    if entries.is_empty() {
        Err(MetricError::Empty)
    } else {
        Ok(())
    }
}

/// Mean magnitude of relative error, in percent.
pub fn mmre(entries: &[ResidualEntry]) -> Result<f64, MetricError> {
    non_empty(entries)?;
    Ok(100.0 * entries.iter().map(ResidualEntry::mre).sum::<f64>() / entries.len() as f64)
}

/// Median magnitude of relative error, in percent.
pub fn mdmre(entries: &[ResidualEntry]) -> Result<f64, MetricError> {
    non_empty(entries)?;
    let mres: Vec<f64> = entries.iter().map(|e| 100.0 * e.mre()).collect();
    Ok(median(mres))
}

/// Fraction of predictions whose relative error is at most `threshold` percent.
pub fn pred(entries: &[ResidualEntry], threshold: f64) -> Result<f64, MetricError> {
    non_empty(entries)?;
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(MetricError::InvalidThreshold);
    }
    let within = entries.iter().filter(|e| e.abs_residual() <= threshold / 100.0 * e.actual).count();
    Ok(within as f64 / entries.len() as f64)
}

/// Mean absolute residual, in effort units.
pub fn mar(entries: &[ResidualEntry]) -> Result<f64, MetricError> {
    non_empty(entries)?;
    Ok(entries.iter().map(ResidualEntry::abs_residual).sum::<f64>() / entries.len() as f64)
}

/// Expected MAR of predicting each case by a uniformly chosen other case:
/// the mean of `|Yᵢ − Yⱼ|` over ordered pairs `i ≠ j`.
pub fn random_guess_mar(efforts: &[f64]) -> Result<f64, MetricError> {
    let n = efforts.len();
    if n < 2 {
        return Err(MetricError::TooFewForSa);
    }
    let mut sorted = efforts.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Σ_{i<j} (y_j − y_i) over the sorted values.
    let pair_sum: f64 = sorted.iter().enumerate().map(|(j, y)| y * (2.0 * j as f64 - (n as f64 - 1.0))).sum();
    let value = 2.0 * pair_sum / (n as f64 * (n as f64 - 1.0));
    if value <= 0.0 {
        return Err(MetricError::DegenerateBaseline);
    }
    Ok(value)
}

/// Standardised Accuracy in percent against the dataset's efforts.
pub fn standardised_accuracy(entries: &[ResidualEntry], dataset_efforts: &[f64]) -> Result<f64, MetricError> {
    let baseline = random_guess_mar(dataset_efforts)?;
    sa_against(entries, baseline)
}

fn sa_against(entries: &[ResidualEntry], baseline: f64) -> Result<f64, MetricError> {
    Ok((1.0 - mar(entries)? / baseline) * 100.0)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Which way a metric improves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

/// A named accuracy metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Mmre,
    Mdmre,
    Pred(f64),
    Mar,
    Sa,
}

impl Metric {
    pub fn direction(self) -> Direction {
        match self {
            Metric::Pred(_) | Metric::Sa => Direction::HigherIsBetter,
            _ => Direction::LowerIsBetter,
        }
    }

    /// Value oriented so that smaller is always better.
    pub fn loss(self, value: f64) -> f64 {
        match self.direction() {
            Direction::LowerIsBetter => value,
            Direction::HigherIsBetter => -value,
        }
    }

    /// Evaluates on `entries`; `baseline` is the random-guess MAR used by SA.
    pub fn evaluate(self, entries: &[ResidualEntry], baseline: Option<f64>) -> Result<f64, MetricError> {
        match self {
            Metric::Mmre => mmre(entries),
            Metric::Mdmre => mdmre(entries),
            Metric::Pred(t) => pred(entries, t),
            Metric::Mar => mar(entries),
            Metric::Sa => sa_against(entries, baseline.ok_or(MetricError::TooFewForSa)?),
        }
    }

    pub fn needs_baseline(self) -> bool {
        matches!(self, Metric::Sa)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Mmre => f.write_str("mmre"),
            Metric::Mdmre => f.write_str("mdmre"),
            Metric::Pred(t) => write!(f, "pred({t})"),
            Metric::Mar => f.write_str("mar"),
            Metric::Sa => f.write_str("sa"),
        }
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "mmre" => return Ok(Metric::Mmre),
            "mdmre" => return Ok(Metric::Mdmre),
            "mar" => return Ok(Metric::Mar),
            "sa" => return Ok(Metric::Sa),
            "pred" => return Ok(Metric::Pred(DEFAULT_PRED_THRESHOLD)),
            _ => {}
        }
        let threshold = t
            .strip_prefix("pred(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix("pred"))
            .and_then(|n| n.parse::<f64>().ok())
            .filter(|v| *v > 0.0 && v.is_finite());
        threshold.map(Metric::Pred).ok_or_else(|| MetricError::UnknownMetric(s.to_string()))
    }
}

impl Serialize for Metric {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricResult {
    pub name: String,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence_level: f64,
    pub n: usize,
    pub bootstrap_b: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub b: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions { b: DEFAULT_BOOTSTRAP_B, level: DEFAULT_CONFIDENCE, seed: 0 }
    }
}

/// Point value and percentile interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub value: f64,
    pub low: f64,
    pub high: f64,
}

/// Percentile bootstrap of `statistic` over `items`.
///
/// Resample `r` draws from its own ChaCha stream (`seed`, stream `r`), so
/// results do not depend on how resamples are scheduled. A resample on
/// which the statistic fails is redrawn from the same stream; at most
/// `10·b` redraws are allowed in total.
pub fn bootstrap<T, F>(items: &[T], statistic: F, opts: BootstrapOptions, exec: Execution) -> Result<Interval, MetricError>
where
    T: Sync + Clone,
    F: Fn(&[T]) -> Result<f64, MetricError> + Sync + Send,
{
    if opts.b < MIN_BOOTSTRAP_B {
        return Err(MetricError::TooFewResamples(opts.b));
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(MetricError::InvalidLevel(opts.level));
    }
    let value = statistic(items)?;
    let n = items.len();
    let budget = 10 * opts.b;
    let draws = map_range(exec, opts.b, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let mut sample: Vec<T> = Vec::with_capacity(n);
        for redraws in 0..=budget {
            sample.clear();
            sample.extend((0..n).map(|_| items[rng.random_range(0..n)].clone()));
            if let Ok(v) = statistic(&sample) {
                return Some((v, redraws));
            }
        }
        None
    });
    let mut stats = Vec::with_capacity(opts.b);
    let mut redraws = 0;
    for d in draws {
        let (v, r) = d.ok_or(MetricError::RedrawBudget)?;
        redraws += r;
        stats.push(v);
    }
    if redraws > budget {
        return Err(MetricError::RedrawBudget);
    }
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - opts.level;
    Ok(Interval { value, low: quantile_sorted(&stats, alpha / 2.0), high: quantile_sorted(&stats, 1.0 - alpha / 2.0) })
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bootstrap interval for one metric on a residual set.
pub fn bootstrap_ci(
    residuals: &ResidualSet,
    metric: Metric,
    baseline: Option<f64>,
    opts: BootstrapOptions,
    exec: Execution,
) -> Result<MetricResult, MetricError> {
    let iv = bootstrap(&residuals.entries, |s| metric.evaluate(s, baseline), opts, exec)?;
    Ok(MetricResult {
        name: metric.to_string(),
        value: iv.value,
        ci_low: iv.low,
        ci_high: iv.high,
        confidence_level: opts.level,
        n: residuals.len(),
        bootstrap_b: opts.b,
        seed: opts.seed,
    })
}

/// Cohen's d on two samples with pooled standard deviation; positive when
/// `a` has the larger mean. Zero pooled variance yields ±∞ for unequal
/// means and 0 for equal ones.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return Err(MetricError::Empty);
    }
    if n1 + n2 < 3 {
        return Err(MetricError::TooFewForEffect);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let (m1, m2) = (mean(a), mean(b));
    let pooled = ((ss(a, m1) + ss(b, m2)) / (n1 + n2 - 2) as f64).sqrt();
    let diff = m1 - m2;
    if pooled == 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY });
    }
    Ok(diff / pooled)
}

/// Cohen's d on the absolute residuals of two predictors.
pub fn cohens_d_residuals(a: &ResidualSet, b: &ResidualSet) -> Result<f64, MetricError> {
    cohens_d(&a.abs_residuals(), &b.abs_residuals())
}
