//! Benchmark predictor: ordinary least squares with forward stepwise
//! selection (with a backward removal check after every entry).
//!
//! Fits go through an SVD so rank deficiency is detected rather than
//! silently inverted. Partial-F p-values use [`crate::stats::f_survival`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FeatureKind, FeatureRole, ProjectCase, Schema, Value};
use crate::stats::f_survival;

/// Predictions are floored here; effort can never be zero or negative.
pub const EFFORT_FLOOR: f64 = 1e-6;

/// Relative singular-value cutoff used for rank detection.
const RANK_TOLERANCE: f64 = 1e-10;

/// Residual sums below this fraction of the total sum of squares count as a
/// perfect fit.
const PERFECT_FIT: f64 = 1e-12;

pub const DEFAULT_ALPHA_ENTER: f64 = 0.05;
pub const DEFAULT_ALPHA_REMOVE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    None,
    LogLog,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitStats {
    pub r_squared: f64,
    pub n: usize,
    pub residual_std: f64,
    /// Rows removed by listwise deletion.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionModel {
    pub intercept: f64,
    pub selected: Vec<String>,
    /// Aligned with `selected`.
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub feature_indices: Vec<usize>,
    /// Boolean (0/1) columns, aligned with `selected`; never log-transformed.
    #[serde(skip)]
    pub indicators: Vec<bool>,
    pub transform: Transform,
    pub fit_stats: FitStats,
    /// Set when stepwise selection admitted no feature; the model then
    /// predicts the (transformed-scale) mean effort.
    pub intercept_only: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("feature '{0}' is not an active numeric predictor")]
    NotNumericPredictor(String),
    #[error("{n} usable case(s) is too few for {p} feature(s) (need n > p + 1)")]
    TooFewCases { n: usize, p: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("log-log transform needs positive values; '{0}' has a non-positive value")]
    NonPositiveLog(String),
    #[error("alpha-enter ({enter}) must not exceed alpha-remove ({remove})")]
    AlphaOrder { enter: f64, remove: f64 },
    #[error("no candidate features")]
    NoCandidates,
    #[error("target value for selected feature '{0}' is missing")]
    MissingValue(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionPrediction {
    pub value: f64,
    /// The raw prediction was below [`EFFORT_FLOOR`].
    pub floored: bool,
}

fn resolve_features(schema: &Schema, names: &[&str]) -> Result<Vec<usize>, RegressionError> {
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let i = schema.index_of(name).ok_or_else(|| RegressionError::UnknownFeature(name.to_string()))?;
        let def = &schema.features[i];
        if def.role != FeatureRole::Predictor || !def.kind.is_numeric() {
            return Err(RegressionError::NotNumericPredictor(name.to_string()));
        }
        out.push(i);
    }
    Ok(out)
}

/// Rows with a value for every feature in `features`, transformed.
struct Design {
    /// columns[j][row]
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    dropped: usize,
}

fn build_design(schema: &Schema, cases: &[&ProjectCase], features: &[usize], transform: Transform) -> Result<Design, RegressionError> {
    let mut columns = vec![Vec::with_capacity(cases.len()); features.len()];
    let mut y = Vec::with_capacity(cases.len());
    let mut dropped = 0;
    'rows: for case in cases {
        let mut row = Vec::with_capacity(features.len());
        for &f in features {
            match case.value(f).as_number() {
                Some(v) => row.push(v),
                None => {
                    dropped += 1;
                    continue 'rows;
                }
            }
        }
        for (col, (v, &f)) in columns.iter_mut().zip(row.into_iter().zip(features)) {
            col.push(apply(transform, v, &schema.features[f].name, is_indicator(schema, f))?);
        }
        y.push(apply(transform, case.effort(), &schema.target().name, false)?);
    }
    Ok(Design { columns, y, dropped })
}

fn is_indicator(schema: &Schema, f: usize) -> bool {
    schema.features[f].kind == FeatureKind::Boolean
}

fn apply(transform: Transform, v: f64, name: &str, indicator: bool) -> Result<f64, RegressionError> {
    match transform {
        Transform::None => Ok(v),
        Transform::LogLog if indicator => Ok(v),
        Transform::LogLog if v > 0.0 => Ok(v.ln()),
        Transform::LogLog => Err(RegressionError::NonPositiveLog(name.to_string())),
    }
}

struct LeastSquares {
    beta: Vec<f64>,
    rss: f64,
}

/// Least squares with an intercept over the selected columns.
fn least_squares(columns: &[&[f64]], y: &[f64]) -> Result<LeastSquares, RegressionError> {
    let n = y.len();
    let p = columns.len();
    if n <= p + 1 {
        return Err(RegressionError::TooFewCases { n, p });
    }
    let x = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { columns[c - 1][r] });
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = RANK_TOLERANCE * s_max;
    if svd.rank(tol) < p + 1 {
        return Err(RegressionError::RankDeficient);
    }
    let beta = svd.solve(&yv, tol).map_err(|_| RegressionError::RankDeficient)?;
    let resid = &yv - &x * &beta;
    Ok(LeastSquares { beta: beta.iter().copied().collect(), rss: resid.norm_squared() })
}

fn total_ss(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

fn assemble(
    schema: &Schema,
    features: &[usize],
    fit: &LeastSquares,
    y: &[f64],
    transform: Transform,
    dropped: usize,
    intercept_only: bool,
) -> RegressionModel {
    let n = y.len();
    let tss = total_ss(y);
    let r_squared = if tss > 0.0 { (1.0 - fit.rss / tss).clamp(0.0, 1.0) } else { 0.0 };
    let dof = n.saturating_sub(features.len() + 1).max(1);
    RegressionModel {
        intercept: fit.beta[0],
        selected: features.iter().map(|&i| schema.features[i].name.clone()).collect(),
        coefficients: fit.beta[1..].to_vec(),
        feature_indices: features.to_vec(),
        indicators: features.iter().map(|&f| is_indicator(schema, f)).collect(),
        transform,
        fit_stats: FitStats { r_squared, n, residual_std: (fit.rss / dof as f64).sqrt(), dropped },
        intercept_only,
    }
}

/// Ordinary least squares of effort on `features`, with listwise deletion.
pub fn ols_fit(schema: &Schema, cases: &[&ProjectCase], features: &[&str], transform: Transform) -> Result<RegressionModel, RegressionError> {
    let idx = resolve_features(schema, features)?;
    let design = build_design(schema, cases, &idx, transform)?;
    let cols: Vec<&[f64]> = design.columns.iter().map(Vec::as_slice).collect();
    let fit = least_squares(&cols, &design.y)?;
    Ok(assemble(schema, &idx, &fit, &design.y, transform, design.dropped, false))
}

/// Mean-effort model on the transformed scale.
pub fn intercept_only_fit(schema: &Schema, cases: &[&ProjectCase], transform: Transform) -> Result<RegressionModel, RegressionError> {
    let design = build_design(schema, cases, &[], transform)?;
    if design.y.is_empty() {
        return Err(RegressionError::TooFewCases { n: 0, p: 0 });
    }
    let mean = design.y.iter().sum::<f64>() / design.y.len() as f64;
    let rss = total_ss(&design.y);
    Ok(assemble(schema, &[], &LeastSquares { beta: vec![mean], rss }, &design.y, transform, design.dropped, true))
}

/// Partial-F p-value for the features separating a reduced and a full model.
fn partial_p(rss_reduced: f64, rss_full: f64, df_num: usize, df_den: usize, tss: f64) -> f64 {
    if df_den == 0 || rss_reduced <= PERFECT_FIT * tss || tss <= 0.0 {
        return 1.0;
    }
    let num = (rss_reduced - rss_full).max(0.0) / df_num as f64;
    let den = rss_full / df_den as f64;
    let f = if den > 0.0 { num / den } else { f64::INFINITY };
    f_survival(f, df_num as f64, df_den as f64)
}

/// Forward stepwise selection with a backward removal check.
///
/// Candidates are considered in schema order, which also breaks exact
/// p-value ties. When nothing passes `alpha_enter` the result is an
/// intercept-only model with `intercept_only` set.
pub fn stepwise_fit(
    schema: &Schema,
    cases: &[&ProjectCase],
    candidates: &[&str],
    alpha_enter: f64,
    alpha_remove: f64,
    transform: Transform,
) -> Result<RegressionModel, RegressionError> {
    if alpha_enter > alpha_remove {
        return Err(RegressionError::AlphaOrder { enter: alpha_enter, remove: alpha_remove });
    }
    if candidates.is_empty() {
        return Err(RegressionError::NoCandidates);
    }
    let mut cand = resolve_features(schema, candidates)?;
    cand.sort_unstable();
    cand.dedup();
    let design = build_design(schema, cases, &cand, transform)?;
    let n = design.y.len();
    if n < 2 {
        return Err(RegressionError::TooFewCases { n, p: 0 });
    }
    let tss = total_ss(&design.y);
    let column = |f: usize| design.columns[cand.iter().position(|&c| c == f).unwrap()].as_slice();
    let fit_set = |set: &[usize]| -> Result<LeastSquares, RegressionError> {
        let cols: Vec<&[f64]> = set.iter().map(|&f| column(f)).collect();
        least_squares(&cols, &design.y)
    };

    let mut selected: Vec<usize> = Vec::new();
    let mut current_rss = tss;
    let max_steps = 4 * (cand.len() + 1);
    for _ in 0..max_steps {
        // Forward step.
        let mut best: Option<(f64, usize, f64)> = None;
        for &c in cand.iter().filter(|c| !selected.contains(c)) {
            let mut trial = selected.clone();
            trial.push(c);
            let Ok(fit) = fit_set(&trial) else { continue };
            let df_den = n - trial.len() - 1;
            let p = partial_p(current_rss, fit.rss, 1, df_den, tss);
            if best.is_none_or(|(bp, _, _)| p < bp) {
                best = Some((p, c, fit.rss));
            }
        }
        let Some((p, c, rss)) = best else { break };
        if p >= alpha_enter {
            break;
        }
        selected.push(c);
        current_rss = rss;

        // Backward check: drop the weakest feature while it exceeds alpha_remove.
        loop {
            if selected.len() < 2 {
                break;
            }
            let df_den = n - selected.len() - 1;
            let mut worst: Option<(f64, usize, f64)> = None;
            for (pos, _) in selected.iter().enumerate() {
                let mut reduced = selected.clone();
                reduced.remove(pos);
                let Ok(fit) = fit_set(&reduced) else { continue };
                let p = partial_p(fit.rss, current_rss, 1, df_den, tss);
                if worst.is_none_or(|(wp, _, _)| p > wp) {
                    worst = Some((p, pos, fit.rss));
                }
            }
            match worst {
                Some((p, pos, rss)) if p > alpha_remove => {
                    selected.remove(pos);
                    current_rss = rss;
                }
                _ => break,
            }
        }
    }

    if selected.is_empty() {
        let mean = design.y.iter().sum::<f64>() / n as f64;
        return Ok(assemble(schema, &[], &LeastSquares { beta: vec![mean], rss: tss }, &design.y, transform, design.dropped, true));
    }
    selected.sort_unstable();
    let fit = fit_set(&selected)?;
    Ok(assemble(schema, &selected, &fit, &design.y, transform, design.dropped, false))
}

/// Evaluates the model at a target, floored at [`EFFORT_FLOOR`].
pub fn regression_predict(model: &RegressionModel, target: &[Value]) -> Result<RegressionPrediction, RegressionError> {
    let mut lin = model.intercept;
    for (((&idx, name), coef), &indicator) in model.feature_indices.iter().zip(&model.selected).zip(&model.coefficients).zip(&model.indicators) {
        let v = target.get(idx).and_then(Value::as_number).ok_or_else(|| RegressionError::MissingValue(name.clone()))?;
        lin += coef * apply(model.transform, v, name, indicator)?;
    }
    let raw = match model.transform {
        Transform::None => lin,
        Transform::LogLog => lin.exp(),
    };
    Ok(if raw < EFFORT_FLOOR {
        RegressionPrediction { value: EFFORT_FLOOR, floored: true }
    } else {
        RegressionPrediction { value: raw, floored: false }
    })
}

impl RegressionModel {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.selected.iter().position(|s| s == name).map(|i| self.coefficients[i])
    }

    pub fn predict(&self, target: &[Value]) -> Result<RegressionPrediction, RegressionError> {
        regression_predict(self, target)
    }
}
