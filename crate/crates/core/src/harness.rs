//! Experiment orchestration: leave-one-out evaluation, wrapper feature
//! subset search, training-set-size sensitivity curves and vote counting.
//!
//! Every per-fold quantity (normalization ranges, regression coefficients,
//! selected subsets) is computed from the fold's training cases only.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analogy::{AnalogyError, AnalogyModel, FeatureRanges, SimilarityConfig};
use crate::dataset::{CaseId, Dataset, FeatureRole, ProjectCase, Schema};
use crate::exec::{map_range, map_slice, Execution};
use crate::metrics::{self, BootstrapOptions, Direction, Interval, Metric, MetricError, ResidualEntry, ResidualSet};
use crate::regression::{stepwise_fit, RegressionModel, Transform, DEFAULT_ALPHA_ENTER, DEFAULT_ALPHA_REMOVE};

/// Exhaustive search enumerates 2^p − 1 subsets; beyond this it is refused.
pub const MAX_EXHAUSTIVE_PREDICTORS: usize = 16;

/// Relative tolerance under which two objective values count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("leave-one-out needs at least 3 cases, dataset has {0}")]
    TooFewCases(usize),
    #[error("k = {k} cannot be trained on {available} case(s)")]
    KTooLarge { k: usize, available: usize },
    #[error("exhaustive search supports at most {MAX_EXHAUSTIVE_PREDICTORS} predictors, got {0}")]
    TooManyPredictors(usize),
    #[error("invalid sensitivity sizes: {0}")]
    InvalidSizes(String),
    #[error("repeats must be at least 1")]
    InvalidRepeats,
    #[error("residual sets are not paired on identical cases")]
    Unpaired,
    #[error("comparison records are empty")]
    NoRecords,
    #[error("epsilon must be finite and non-negative")]
    InvalidEpsilon,
    #[error("comparison records: {0}")]
    Records(String),
    #[error(transparent)]
    Analogy(#[from] AnalogyError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepwiseSpec {
    #[serde(default = "default_alpha_enter")]
    pub alpha_enter: f64,
    #[serde(default = "default_alpha_remove")]
    pub alpha_remove: f64,
    #[serde(default)]
    pub transform: Transform,
    /// Candidate features; defaults to every numeric active predictor.
    #[serde(default)]
    pub candidates: Option<Vec<String>>,
}

fn default_alpha_enter() -> f64 {
    DEFAULT_ALPHA_ENTER
}

fn default_alpha_remove() -> f64 {
    DEFAULT_ALPHA_REMOVE
}

impl Default for StepwiseSpec {
    fn default() -> Self {
        StepwiseSpec { alpha_enter: DEFAULT_ALPHA_ENTER, alpha_remove: DEFAULT_ALPHA_REMOVE, transform: Transform::None, candidates: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PredictorSpec {
    Analogy(SimilarityConfig),
    Stepwise(StepwiseSpec),
    MeanBaseline,
}

impl PredictorSpec {
    /// Short description used as a default label.
    pub fn describe(&self) -> String {
        match self {
            PredictorSpec::Analogy(c) => format!("analogy(k={}, {:?})", c.k, c.pooling).to_lowercase(),
            PredictorSpec::Stepwise(s) => format!("stepwise({:?})", s.transform).to_lowercase(),
            PredictorSpec::MeanBaseline => "mean-baseline".to_string(),
        }
    }
}

/// What a fold trained, kept for auditing.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FoldArtifacts {
    Analogy {
        #[serde(skip)]
        ranges: FeatureRanges,
        subset: Vec<String>,
    },
    Stepwise {
        model: RegressionModel,
    },
    MeanBaseline {
        mean: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRecord {
    pub held_out: CaseId,
    pub artifacts: Option<FoldArtifacts>,
    /// Why the predictor failed, when the fallback was used.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoocvRun {
    pub residuals: ResidualSet,
    pub folds: Vec<FoldRecord>,
    pub seed: u64,
}

impl LoocvRun {
    pub fn fallbacks(&self) -> usize {
        self.residuals.fallbacks()
    }
}

enum Trained<'a> {
    Analogy(AnalogyModel<'a>),
    Stepwise(RegressionModel),
    Mean(f64),
}

impl Trained<'_> {
    fn predict(&self, target: &ProjectCase) -> Result<f64, String> {
        match self {
            Trained::Analogy(m) => m.predict(target.values()).map(|p| p.estimate).map_err(|e| e.to_string()),
            Trained::Stepwise(m) => m.predict(target.values()).map(|p| p.value).map_err(|e| e.to_string()),
            Trained::Mean(v) => Ok(*v),
        }
    }

    fn artifacts(&self) -> FoldArtifacts {
        match self {
            Trained::Analogy(m) => FoldArtifacts::Analogy {
                ranges: m.ranges().clone(),
                subset: m.resolved().features.iter().map(|f| f.name.clone()).collect(),
            },
            Trained::Stepwise(m) => FoldArtifacts::Stepwise { model: m.clone() },
            Trained::Mean(v) => FoldArtifacts::MeanBaseline { mean: *v },
        }
    }
}

fn mean_effort(cases: &[&ProjectCase]) -> f64 {
    cases.iter().map(|c| c.effort()).sum::<f64>() / cases.len() as f64
}

fn numeric_predictors(schema: &Schema) -> Vec<&str> {
    schema
        .features
        .iter()
        .filter(|f| f.role == FeatureRole::Predictor && f.kind.is_numeric())
        .map(|f| f.name.as_str())
        .collect()
}

fn train<'a>(spec: &PredictorSpec, schema: &'a Schema, training: Vec<&'a ProjectCase>) -> Result<Trained<'a>, String> {
    match spec {
        PredictorSpec::Analogy(cfg) => AnalogyModel::fit(schema, training, cfg).map(Trained::Analogy).map_err(|e| e.to_string()),
        PredictorSpec::Stepwise(s) => {
            let candidates: Vec<&str> = match &s.candidates {
                Some(c) => c.iter().map(String::as_str).collect(),
                None => numeric_predictors(schema),
            };
            stepwise_fit(schema, &training, &candidates, s.alpha_enter, s.alpha_remove, s.transform)
                .map(Trained::Stepwise)
                .map_err(|e| e.to_string())
        }
        PredictorSpec::MeanBaseline => Ok(Trained::Mean(mean_effort(&training))),
    }
}

/// Trains on `training` and predicts `target`, falling back to the training
/// mean on failure.
fn fold<'a>(spec: &PredictorSpec, schema: &'a Schema, training: Vec<&'a ProjectCase>, target: &ProjectCase) -> (ResidualEntry, FoldRecord) {
    let fallback_mean = mean_effort(&training);
    let (predicted, artifacts, failure) = match train(spec, schema, training) {
        Ok(model) => match model.predict(target) {
            Ok(p) => (p, Some(model.artifacts()), None),
            Err(e) => (fallback_mean, Some(model.artifacts()), Some(e)),
        },
        Err(e) => (fallback_mean, None, Some(e)),
    };
    let entry = ResidualEntry { case_id: target.id().clone(), actual: target.effort(), predicted, fallback: failure.is_some() };
    (entry, FoldRecord { held_out: target.id().clone(), artifacts, failure })
}

fn without<'a>(cases: &[&'a ProjectCase], skip: usize) -> Vec<&'a ProjectCase> {
    cases.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, c)| *c).collect()
}

fn loocv_over(schema: &Schema, cases: &[&ProjectCase], spec: &PredictorSpec, exec: Execution) -> Vec<(ResidualEntry, FoldRecord)> {
    map_range(exec, cases.len(), |i| fold(spec, schema, without(cases, i), cases[i]))
}

fn check_trainable(spec: &PredictorSpec, n: usize) -> Result<(), HarnessError> {
    if n < 3 {
        return Err(HarnessError::TooFewCases(n));
    }
    if let PredictorSpec::Analogy(cfg) = spec {
        if cfg.k > n - 1 {
            return Err(HarnessError::KTooLarge { k: cfg.k, available: n - 1 });
        }
    }
    Ok(())
}

/// Leave-one-out evaluation: every case is predicted from all the others.
///
/// A fold whose predictor fails is recorded with the training-mean fallback
/// and flagged, so the residual set always has exactly `n` entries.
pub fn loocv(dataset: &Dataset, spec: &PredictorSpec, seed: u64, exec: Execution) -> Result<LoocvRun, HarnessError> {
    check_trainable(spec, dataset.len())?;
    if let PredictorSpec::Analogy(cfg) = spec {
        cfg.resolve(dataset.schema())?;
    }
    let cases = dataset.case_refs();
    let (entries, folds): (Vec<_>, Vec<_>) = loocv_over(dataset.schema(), &cases, spec, exec).into_iter().unzip();
    let residuals = ResidualSet::new(entries, spec.describe(), dataset.label())?;
    Ok(LoocvRun { residuals, folds, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exhaustive,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nesting {
    /// Search inside every outer fold on that fold's training cases.
    PerFold,
    /// Search once on all cases, then evaluate; optimistic.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetSearchConfig {
    pub mode: SearchMode,
    pub nesting: Nesting,
    pub objective: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub subset: Vec<String>,
    /// Objective metric value (not the oriented loss); `None` if it could
    /// not be computed.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldSubset {
    pub held_out: CaseId,
    pub subset: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSearchOutcome {
    /// Subset chosen by searching all cases (what would be deployed).
    pub selected: Vec<String>,
    pub objective: Metric,
    pub objective_value: Option<f64>,
    pub trace: Vec<TraceEntry>,
    pub nesting: Nesting,
    /// Leave-one-out residuals of the searched predictor; unbiased only
    /// for per-fold nesting.
    pub residuals: ResidualSet,
    pub per_fold: Vec<FoldSubset>,
    /// Set for global nesting: the evaluation reused the held-out cases
    /// during selection.
    pub peeking_prone: bool,
}

struct Search {
    subset: Vec<usize>,
    loss: f64,
    trace: Vec<(Vec<usize>, f64)>,
}

/// Inner leave-one-out objective of `subset`, as a loss (smaller is better).
fn subset_loss(schema: &Schema, cases: &[&ProjectCase], base: &SimilarityConfig, subset: &[usize], objective: Metric) -> f64 {
    let cfg = SimilarityConfig {
        feature_subset: Some(subset.iter().map(|&i| schema.features[i].name.clone()).collect()),
        ..base.clone()
    };
    let spec = PredictorSpec::Analogy(cfg);
    if check_trainable(&spec, cases.len()).is_err() {
        return f64::INFINITY;
    }
    let entries: Vec<ResidualEntry> = loocv_over(schema, cases, &spec, Execution::Sequential).into_iter().map(|(e, _)| e).collect();
    let efforts: Vec<f64> = cases.iter().map(|c| c.effort()).collect();
    let baseline = if objective.needs_baseline() { metrics::random_guess_mar(&efforts).ok() } else { None };
    objective.evaluate(&entries, baseline).map(|v| objective.loss(v)).unwrap_or(f64::INFINITY)
}

fn ties(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Is `(loss, subset)` preferred over the incumbent? Ties go to the smaller
/// subset, then to the lexicographically smaller schema-index sequence.
fn preferred(loss: f64, subset: &[usize], best_loss: f64, best: &[usize]) -> bool {
    if ties(loss, best_loss) {
        (subset.len(), subset) < (best.len(), best)
    } else {
        loss < best_loss
    }
}

fn search(
    schema: &Schema,
    cases: &[&ProjectCase],
    base: &SimilarityConfig,
    candidates: &[usize],
    mode: SearchMode,
    objective: Metric,
    exec: Execution,
) -> Search {
    match mode {
        SearchMode::Exhaustive => {
            let p = candidates.len();
            let subsets: Vec<Vec<usize>> = (1u32..(1u32 << p))
                .map(|mask| (0..p).filter(|b| mask & (1 << b) != 0).map(|b| candidates[b]).collect())
                .collect();
            let losses = map_slice(exec, &subsets, |s| subset_loss(schema, cases, base, s, objective));
            let mut trace: Vec<(Vec<usize>, f64)> = subsets.into_iter().zip(losses).collect();
            trace.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
            let mut best = (Vec::new(), f64::INFINITY);
            for (s, l) in &trace {
                if best.0.is_empty() || preferred(*l, s, best.1, &best.0) {
                    best = (s.clone(), *l);
                }
            }
            Search { subset: best.0, loss: best.1, trace }
        }
        SearchMode::Forward => {
            let mut current: Vec<usize> = Vec::new();
            let mut current_loss = f64::INFINITY;
            let mut trace = Vec::new();
            loop {
                let trials: Vec<Vec<usize>> = candidates
                    .iter()
                    .filter(|c| !current.contains(c))
                    .map(|&c| {
                        let mut t = current.clone();
                        t.push(c);
                        t.sort_unstable();
                        t
                    })
                    .collect();
                if trials.is_empty() {
                    break;
                }
                let losses = map_slice(exec, &trials, |s| subset_loss(schema, cases, base, s, objective));
                let mut round_best: Option<(Vec<usize>, f64)> = None;
                for (t, l) in trials.into_iter().zip(losses) {
                    trace.push((t.clone(), l));
                    if round_best.as_ref().is_none_or(|(bs, bl)| preferred(l, &t, *bl, bs)) {
                        round_best = Some((t, l));
                    }
                }
                let (t, l) = round_best.expect("non-empty round");
                let improves = current.is_empty() || (l < current_loss && !ties(l, current_loss));
                if !improves {
                    break;
                }
                current = t;
                current_loss = l;
            }
            Search { subset: current, loss: current_loss, trace }
        }
    }
}

fn names(schema: &Schema, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| schema.features[i].name.clone()).collect()
}

/// Wrapper feature-subset search for the analogy predictor, scored by an
/// inner leave-one-out objective.
pub fn subset_search(
    dataset: &Dataset,
    base: &SimilarityConfig,
    search_cfg: &SubsetSearchConfig,
    seed: u64,
    exec: Execution,
) -> Result<SubsetSearchOutcome, HarnessError> {
    let schema = dataset.schema();
    let resolved = base.resolve(schema)?;
    let candidates: Vec<usize> = resolved.features.iter().map(|f| f.index).collect();
    if search_cfg.mode == SearchMode::Exhaustive && candidates.len() > MAX_EXHAUSTIVE_PREDICTORS {
        return Err(HarnessError::TooManyPredictors(candidates.len()));
    }
    let spec = PredictorSpec::Analogy(base.clone());
    check_trainable(&spec, dataset.len())?;
    let cases = dataset.case_refs();
    let objective = search_cfg.objective;

    let global = search(schema, &cases, base, &candidates, search_cfg.mode, objective, exec);
    let with_subset = |subset: &[usize]| {
        PredictorSpec::Analogy(SimilarityConfig { feature_subset: Some(names(schema, subset)), ..base.clone() })
    };

    let (entries, per_fold): (Vec<ResidualEntry>, Vec<FoldSubset>) = match search_cfg.nesting {
        Nesting::Global => {
            let spec = with_subset(&global.subset);
            loocv_over(schema, &cases, &spec, exec)
                .into_iter()
                .map(|(e, f)| {
                    let fs = FoldSubset { held_out: f.held_out, subset: names(schema, &global.subset) };
                    (e, fs)
                })
                .unzip()
        }
        Nesting::PerFold => map_range(exec, cases.len(), |i| {
            let training = without(&cases, i);
            let inner = search(schema, &training, base, &candidates, search_cfg.mode, objective, Execution::Sequential);
            let spec = with_subset(&inner.subset);
            let (entry, _) = fold(&spec, schema, training, cases[i]);
            (entry, FoldSubset { held_out: cases[i].id().clone(), subset: names(schema, &inner.subset) })
        })
        .into_iter()
        .unzip(),
    };
    let label = format!("{} + {:?} {:?} search", spec.describe(), search_cfg.mode, search_cfg.nesting).to_lowercase();
    let residuals = ResidualSet::new(entries, label, dataset.label())?;
    let to_value = |loss: f64| loss.is_finite().then(|| objective.loss(loss));
    let _ = seed;
    Ok(SubsetSearchOutcome {
        selected: names(schema, &global.subset),
        objective,
        objective_value: to_value(global.loss),
        trace: global.trace.iter().map(|(s, l)| TraceEntry { subset: names(schema, s), objective: to_value(*l) }).collect(),
        nesting: search_cfg.nesting,
        residuals,
        per_fold,
        peeking_prone: search_cfg.nesting == Nesting::Global,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseOrdering {
    Random,
    Chronological,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub size: usize,
    pub repeat: usize,
    pub test_n: usize,
    /// Aligned with [`CurveTable::metrics`]; `None` when not computable.
    pub values: Vec<Option<f64>>,
    pub fallbacks: usize,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadRow {
    pub size: usize,
    pub metric: Metric,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveTable {
    pub metrics: Vec<Metric>,
    pub ordering: CaseOrdering,
    pub rows: Vec<CurveRow>,
    pub spread: Vec<SpreadRow>,
}

impl CurveTable {
    /// Median across repeats of `metric` at `size`.
    pub fn median_at(&self, size: usize, metric: Metric) -> Option<f64> {
        self.spread.iter().find(|r| r.size == size && r.metric == metric).map(|r| r.median)
    }
}

fn case_orders(dataset: &Dataset, repeats: usize, seed: u64) -> (CaseOrdering, Vec<Vec<usize>>) {
    let schema = dataset.schema();
    let mut base: Vec<usize> = (0..dataset.len()).collect();
    base.sort_by(|&a, &b| dataset.cases()[a].id().cmp(dataset.cases()[b].id()));
    if let Some(idx) = schema.chronology.as_ref().and_then(|c| schema.index_of(c)) {
        let key = |i: usize| dataset.cases()[i].value(idx).as_number().unwrap_or(f64::INFINITY);
        base.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
        return (CaseOrdering::Chronological, vec![base; repeats]);
    }
    let orders = (0..repeats)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut order = base.clone();
            order.shuffle(&mut rng);
            order
        })
        .collect();
    (CaseOrdering::Random, orders)
}

/// Grows the training set along a case ordering and scores every case
/// outside the training prefix, for each size and repeat.
pub fn sensitivity_curve(
    dataset: &Dataset,
    spec: &PredictorSpec,
    sizes: &[usize],
    repeats: usize,
    metrics_list: &[Metric],
    seed: u64,
    exec: Execution,
) -> Result<CurveTable, HarnessError> {
    let n = dataset.len();
    if repeats == 0 {
        return Err(HarnessError::InvalidRepeats);
    }
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::InvalidSizes("sizes must be non-empty, positive and strictly ascending".into()));
    }
    if *sizes.last().unwrap() > n.saturating_sub(1) {
        return Err(HarnessError::InvalidSizes(format!("largest size must be at most n - 1 = {}", n.saturating_sub(1))));
    }
    if let PredictorSpec::Analogy(cfg) = spec {
        cfg.resolve(dataset.schema())?;
    }
    let (ordering, orders) = case_orders(dataset, repeats, seed);
    let baseline = metrics::random_guess_mar(&dataset.efforts()).ok();
    let schema = dataset.schema();
    let cases = dataset.cases();
    let jobs: Vec<(usize, usize)> = (0..repeats).flat_map(|r| sizes.iter().map(move |&s| (r, s))).collect();
    let rows = map_slice(exec, &jobs, |&(repeat, size)| {
        let order = &orders[repeat];
        let training: Vec<&ProjectCase> = order[..size].iter().map(|&i| &cases[i]).collect();
        let test: Vec<&ProjectCase> = order[size..].iter().map(|&i| &cases[i]).collect();
        let blank = |flag: String| CurveRow { size, repeat, test_n: test.len(), values: vec![None; metrics_list.len()], fallbacks: 0, flag: Some(flag) };
        if let PredictorSpec::Analogy(cfg) = spec {
            if size < cfg.k {
                return blank(format!("training size {size} < k = {}", cfg.k));
            }
        }
        let fallback_mean = mean_effort(&training);
        let model = train(spec, schema, training);
        let mut fallbacks = 0;
        let entries: Vec<ResidualEntry> = test
            .iter()
            .map(|t| {
                let predicted = match model.as_ref().map_err(Clone::clone).and_then(|m| m.predict(t)) {
                    Ok(p) => p,
                    Err(_) => {
                        fallbacks += 1;
                        fallback_mean
                    }
                };
                ResidualEntry { case_id: t.id().clone(), actual: t.effort(), predicted, fallback: predicted == fallback_mean && model.is_err() }
            })
            .collect();
        let values = metrics_list.iter().map(|m| m.evaluate(&entries, baseline).ok()).collect();
        let flag = model.err().map(|e| format!("predictor failed to train: {e}"));
        CurveRow { size, repeat, test_n: test.len(), values, fallbacks, flag }
    });
    let mut spread = Vec::new();
    for &size in sizes {
        for (mi, &metric) in metrics_list.iter().enumerate() {
            let mut vals: Vec<f64> = rows.iter().filter(|r| r.size == size).filter_map(|r| r.values[mi]).collect();
            if vals.is_empty() {
                continue;
            }
            vals.sort_by(f64::total_cmp);
            let m = vals.len() / 2;
            let median = if vals.len() % 2 == 1 { vals[m] } else { (vals[m - 1] + vals[m]) / 2.0 };
            spread.push(SpreadRow { size, metric, min: vals[0], median, max: *vals.last().unwrap(), repeats: vals.len() });
        }
    }
    Ok(CurveTable { metrics: metrics_list.to_vec(), ordering, rows, spread })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ABetter,
    BBetter,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRecord {
    pub group: String,
    pub dataset_label: String,
    pub predictor_a: String,
    pub predictor_b: String,
    pub metric: String,
    pub value_a: f64,
    pub value_b: f64,
    pub verdict: Verdict,
    pub effect_size: Option<f64>,
}

/// a-better when `a` beats `b` in the metric's direction by more than
/// `epsilon_percent` of the larger magnitude; symmetric for b.
pub fn classify(direction: Direction, value_a: f64, value_b: f64, epsilon_percent: f64) -> Verdict {
    let margin = epsilon_percent / 100.0 * value_a.abs().max(value_b.abs());
    let gain_a = match direction {
        Direction::LowerIsBetter => value_b - value_a,
        Direction::HigherIsBetter => value_a - value_b,
    };
    if gain_a > margin {
        Verdict::ABetter
    } else if -gain_a > margin {
        Verdict::BBetter
    } else {
        Verdict::Inconclusive
    }
}

impl ComparisonRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        group: impl Into<String>,
        dataset_label: impl Into<String>,
        predictor_a: impl Into<String>,
        predictor_b: impl Into<String>,
        metric: Metric,
        value_a: f64,
        value_b: f64,
        effect_size: Option<f64>,
        epsilon_percent: f64,
    ) -> Self {
        ComparisonRecord {
            group: group.into(),
            dataset_label: dataset_label.into(),
            predictor_a: predictor_a.into(),
            predictor_b: predictor_b.into(),
            metric: metric.to_string(),
            value_a,
            value_b,
            verdict: classify(metric.direction(), value_a, value_b, epsilon_percent),
            effect_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VoteRow {
    pub group: String,
    /// Results+ (a better)
    pub plus: usize,
    /// Results− (b better)
    pub minus: usize,
    /// Results= (inconclusive)
    pub equal: usize,
}

/// Re-derives every verdict with `epsilon_percent` and tallies them per
/// group, in order of first appearance.
pub fn vote_count(records: &[ComparisonRecord], epsilon_percent: f64) -> Result<Vec<VoteRow>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::NoRecords);
    }
    if !(epsilon_percent >= 0.0 && epsilon_percent.is_finite()) {
        return Err(HarnessError::InvalidEpsilon);
    }
    let mut rows: Vec<VoteRow> = Vec::new();
    for r in records {
        let metric: Metric = r.metric.parse()?;
        let verdict = classify(metric.direction(), r.value_a, r.value_b, epsilon_percent);
        let pos = match rows.iter().position(|row| row.group == r.group) {
            Some(p) => p,
            None => {
                rows.push(VoteRow { group: r.group.clone(), plus: 0, minus: 0, equal: 0 });
                rows.len() - 1
            }
        };
        let row = &mut rows[pos];
        match verdict {
            Verdict::ABetter => row.plus += 1,
            Verdict::BBetter => row.minus += 1,
            Verdict::Inconclusive => row.equal += 1,
        }
    }
    Ok(rows)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordRow {
    group: String,
    dataset_label: String,
    predictor_a: String,
    predictor_b: String,
    metric: String,
    value_a: f64,
    value_b: f64,
    #[serde(default)]
    effect_size: Option<f64>,
    #[serde(default)]
    verdict: Option<String>,
}

/// Reads comparison records from CSV with columns `group, dataset_label,
/// predictor_a, predictor_b, metric, value_a, value_b` and optional
/// `effect_size`, `verdict`. Verdicts are recomputed with `epsilon_percent`.
pub fn read_comparison_records(csv_text: &str, epsilon_percent: f64) -> Result<Vec<ComparisonRecord>, HarnessError> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RecordRow>().enumerate() {
        let row = row.map_err(|e| HarnessError::Records(format!("row {}: {e}", i + 1)))?;
        let metric: Metric = row.metric.parse()?;
        let _ = row.verdict;
        out.push(ComparisonRecord::new(
            row.group,
            row.dataset_label,
            row.predictor_a,
            row.predictor_b,
            metric,
            row.value_a,
            row.value_b,
            row.effect_size,
            epsilon_percent,
        ));
    }
    Ok(out)
}

/// Cohen's d on paired absolute residuals with a percentile bootstrap
/// interval over resampled cases.
pub fn paired_effect_size(a: &ResidualSet, b: &ResidualSet, opts: BootstrapOptions, exec: Execution) -> Result<Interval, HarnessError> {
    if a.len() != b.len() || a.entries.iter().zip(&b.entries).any(|(x, y)| x.case_id != y.case_id) {
        return Err(HarnessError::Unpaired);
    }
    let pairs: Vec<(f64, f64)> = a.entries.iter().zip(&b.entries).map(|(x, y)| (x.abs_residual(), y.abs_residual())).collect();
    let stat = |s: &[(f64, f64)]| {
        let (xa, xb): (Vec<f64>, Vec<f64>) = s.iter().copied().unzip();
        metrics::cohens_d(&xa, &xb)
    };
    Ok(metrics::bootstrap(&pairs, stat, opts, exec)?)
}

/// Full paired comparison of two predictors' residuals: one record per
/// metric, each carrying Cohen's d on absolute residuals.
pub fn compare_residuals(
    a: &ResidualSet,
    b: &ResidualSet,
    metric_list: &[Metric],
    baseline: Option<f64>,
    epsilon_percent: f64,
) -> Result<(Vec<ComparisonRecord>, f64), HarnessError> {
    if a.len() != b.len() || a.entries.iter().zip(&b.entries).any(|(x, y)| x.case_id != y.case_id) {
        return Err(HarnessError::Unpaired);
    }
    let d = metrics::cohens_d_residuals(a, b)?;
    let mut out = Vec::new();
    for &m in metric_list {
        let va = m.evaluate(&a.entries, baseline)?;
        let vb = m.evaluate(&b.entries, baseline)?;
        out.push(ComparisonRecord::new(
            format!("{} vs {}", a.predictor_label, b.predictor_label),
            a.dataset_label.clone(),
            a.predictor_label.clone(),
            b.predictor_label.clone(),
            m,
            va,
            vb,
            Some(d),
            epsilon_percent,
        ));
    }
    Ok((out, d))
}

/// Group label → counts, convenient for assertions.
pub fn vote_map(rows: &[VoteRow]) -> BTreeMap<String, (usize, usize, usize)> {
    rows.iter().map(|r| (r.group.clone(), (r.plus, r.minus, r.equal))).collect()
}
