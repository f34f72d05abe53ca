//! The case-based reasoning engine.
//!
//! Numeric features are min-max rescaled with ranges taken from the training
//! case base only; query values outside a training range are clamped to
//! `[0, 1]`. Distance is a weighted, mean-normalized Euclidean distance:
//!
//! ```text
//! d(t, c) = sqrt( Σ w_f · gap_f² / Σ w_f )
//! ```
//!
//! where a categorical gap is the 0/1 overlap mismatch, a one-sided missing
//! value has gap 1, and a feature missing on both sides drops out of both sums.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{feature_range, CaseId, DatasetError, FeatureKind, FeatureRole, ProjectCase, Schema, Value};

/// Added to every distance in inverse-distance weighting so an exact match
/// does not divide by zero.
pub const IDW_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    Nearest,
    #[default]
    Mean,
    InverseDistanceWeightedMean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adaptation {
    #[default]
    None,
    LinearSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CategoricalRule {
    #[default]
    Overlap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityConfig {
    /// Predictor names to use; `None` means every active predictor.
    #[serde(default)]
    pub feature_subset: Option<Vec<String>>,
    /// Per-feature weights; unlisted features weigh 1.0.
    #[serde(default)]
    pub feature_weights: BTreeMap<String, f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub pooling: Pooling,
    #[serde(default)]
    pub adaptation: Adaptation,
    #[serde(default)]
    pub categorical_rule: CategoricalRule,
}

fn default_k() -> usize {
    3
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            feature_subset: None,
            feature_weights: BTreeMap::new(),
            k: default_k(),
            pooling: Pooling::default(),
            adaptation: Adaptation::default(),
            categorical_rule: CategoricalRule::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalogyError {
    #[error("feature subset is empty")]
    EmptySubset,
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("feature '{0}' is not an active predictor")]
    NotPredictor(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("weight for '{0}' must be finite and non-negative")]
    InvalidWeight(String),
    #[error("at least one feature weight must be positive")]
    AllWeightsZero,
    #[error("linear-size adaptation requires a size-driver predictor in the schema")]
    NoSizeDriver,
    #[error("case base has {n} case(s), fewer than k = {k}")]
    CaseBaseTooSmall { k: usize, n: usize },
    #[error("no feature is usable for distance (all missing on both sides or zero weight)")]
    EmptyEffectiveFeatures,
    #[error("target has no non-missing value for any feature in the subset")]
    AllMissingTarget,
}

/// One feature as used by a resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityFeature {
    pub index: usize,
    pub name: String,
    pub kind: FeatureKind,
    pub weight: f64,
}

/// A [`SimilarityConfig`] validated against a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSimilarity {
    pub features: Vec<SimilarityFeature>,
    pub size_driver: Option<usize>,
    pub config: SimilarityConfig,
}

impl SimilarityConfig {
    pub fn resolve(&self, schema: &Schema) -> Result<ResolvedSimilarity, AnalogyError> {
        if self.k == 0 {
            return Err(AnalogyError::InvalidK);
        }
        let indices: Vec<usize> = match &self.feature_subset {
            None => schema.predictor_indices(),
            Some(names) => {
                let mut idx = Vec::with_capacity(names.len());
                for name in names {
                    let i = schema.index_of(name).ok_or_else(|| AnalogyError::UnknownFeature(name.clone()))?;
                    if schema.features[i].role != FeatureRole::Predictor {
                        return Err(AnalogyError::NotPredictor(name.clone()));
                    }
                    if !idx.contains(&i) {
                        idx.push(i);
                    }
                }
                idx.sort_unstable();
                idx
            }
        };
        if indices.is_empty() {
            return Err(AnalogyError::EmptySubset);
        }
        for name in self.feature_weights.keys() {
            let i = schema.index_of(name).ok_or_else(|| AnalogyError::UnknownFeature(name.clone()))?;
            if schema.features[i].role != FeatureRole::Predictor {
                return Err(AnalogyError::NotPredictor(name.clone()));
            }
        }
        let features: Vec<SimilarityFeature> = indices
            .iter()
            .map(|&i| {
                let def = &schema.features[i];
                SimilarityFeature {
                    index: i,
                    name: def.name.clone(),
                    kind: def.kind,
                    weight: self.feature_weights.get(&def.name).copied().unwrap_or(1.0),
                }
            })
            .collect();
        if let Some(f) = features.iter().find(|f| !(f.weight.is_finite() && f.weight >= 0.0)) {
            return Err(AnalogyError::InvalidWeight(f.name.clone()));
        }
        if features.iter().all(|f| f.weight == 0.0) {
            return Err(AnalogyError::AllWeightsZero);
        }
        let size_driver = match self.adaptation {
            Adaptation::None => None,
            Adaptation::LinearSize => Some(schema.size_driver().ok_or(AnalogyError::NoSizeDriver)?),
        };
        Ok(ResolvedSimilarity { features, size_driver, config: self.clone() })
    }
}

/// Training-base min/max per similarity feature, aligned with
/// [`ResolvedSimilarity::features`]. `None` for categorical features and for
/// numeric features with no observed value in the training base.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanges(pub Vec<Option<(f64, f64)>>);

impl FeatureRanges {
    pub fn from_cases(schema: &Schema, cases: &[&ProjectCase], resolved: &ResolvedSimilarity) -> FeatureRanges {
        FeatureRanges(
            resolved
                .features
                .iter()
                .map(|f| {
                    if !f.kind.is_numeric() {
                        return None;
                    }
                    match feature_range(schema, f.index, cases) {
                        Ok(r) => Some(r),
                        Err(DatasetError::AllMissing(_)) | Err(DatasetError::EmptySubset) => None,
                        Err(e) => unreachable!("resolved feature is an accessible numeric predictor: {e}"),
                    }
                })
                .collect(),
        )
    }
}

/// `(value − min)/(max − min)` clamped to `[0, 1]`; 0 for a degenerate range.
pub fn normalize(value: f64, min: f64, max: f64) -> f64 {
    if max <= min {
        return 0.0;
    }
    ((value - min) / (max - min)).clamp(0.0, 1.0)
}

/// Per-feature gap, or `None` when the feature is missing on both sides.
fn gap(target: &Value, case: &Value, kind: FeatureKind, range: Option<(f64, f64)>) -> Option<f64> {
    match (target, case) {
        (Value::Missing, Value::Missing) => None,
        (Value::Missing, _) | (_, Value::Missing) => Some(1.0),
        _ if kind.is_numeric() => {
            let (t, c) = (target.as_number()?, case.as_number()?);
            // A present case value implies an observed range.
            let (lo, hi) = range.unwrap_or((c, c));
            Some((normalize(t, lo, hi) - normalize(c, lo, hi)).abs())
        }
        (Value::Category(a), Value::Category(b)) => Some(if a == b { 0.0 } else { 1.0 }),
        _ => Some(1.0),
    }
}

/// Normalized per-feature gaps between two schema-aligned value vectors,
/// aligned with `resolved.features`.
pub fn feature_gaps(target: &[Value], case: &[Value], resolved: &ResolvedSimilarity, ranges: &FeatureRanges) -> Vec<Option<f64>> {
    resolved
        .features
        .iter()
        .zip(&ranges.0)
        .map(|(f, r)| gap(&target[f.index], &case[f.index], f.kind, *r))
        .collect()
}

/// Weighted standardized Euclidean distance.
pub fn case_distance(
    target: &[Value],
    case: &[Value],
    resolved: &ResolvedSimilarity,
    ranges: &FeatureRanges,
) -> Result<f64, AnalogyError> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (f, r) in resolved.features.iter().zip(&ranges.0) {
        if let Some(g) = gap(&target[f.index], &case[f.index], f.kind, *r) {
            num += f.weight * g * g;
            den += f.weight;
        }
    }
    if den <= 0.0 {
        return Err(AnalogyError::EmptyEffectiveFeatures);
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Donor {
    pub case_id: CaseId,
    pub distance: f64,
    pub effort: f64,
    /// Effort after linear size adaptation, when it was applied.
    pub adapted_effort: Option<f64>,
    pub rank: usize,
}

impl Donor {
    /// The effort value that enters pooling.
    pub fn pooled_effort(&self) -> f64 {
        self.adapted_effort.unwrap_or(self.effort)
    }
}

/// The `k` nearest cases, ranked by ascending distance then case id.
pub fn retrieve(
    target: &[Value],
    cases: &[&ProjectCase],
    resolved: &ResolvedSimilarity,
    ranges: &FeatureRanges,
) -> Result<Vec<Donor>, AnalogyError> {
    let k = resolved.config.k;
    if cases.len() < k {
        return Err(AnalogyError::CaseBaseTooSmall { k, n: cases.len() });
    }
    let mut scored = Vec::with_capacity(cases.len());
    for c in cases {
        scored.push((case_distance(target, c.values(), resolved, ranges)?, *c));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id().cmp(b.1.id())));
    Ok(scored
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (distance, c))| Donor {
            case_id: c.id().clone(),
            distance,
            effort: c.effort(),
            adapted_effort: None,
            rank: i + 1,
        })
        .collect())
}

/// Combines donor efforts into one estimate.
///
/// # Panics
///
/// If `donors` is empty.
pub fn pool(donors: &[Donor], rule: Pooling) -> f64 {
    assert!(!donors.is_empty(), "pooling needs at least one donor");
    match rule {
        Pooling::Nearest => donors.iter().min_by_key(|d| d.rank).unwrap().pooled_effort(),
        Pooling::Mean => donors.iter().map(Donor::pooled_effort).sum::<f64>() / donors.len() as f64,
        Pooling::InverseDistanceWeightedMean => {
            let (num, den) = donors.iter().fold((0.0, 0.0), |(n, d), donor| {
                let w = 1.0 / (donor.distance + IDW_EPSILON);
                (n + w * donor.pooled_effort(), d + w)
            });
            num / den
        }
        Pooling::Median => {
            let mut e: Vec<f64> = donors.iter().map(Donor::pooled_effort).collect();
            e.sort_by(f64::total_cmp);
            let m = e.len() / 2;
            if e.len() % 2 == 1 {
                e[m]
            } else {
                (e[m - 1] + e[m]) / 2.0
            }
        }
    }
}

/// Scales a donor's effort by `target size / donor size`.
///
/// Returns `None` (caller falls back to the unadapted effort) when either
/// size is missing or non-positive.
pub fn adapt_linear(donor_effort: f64, donor_values: &[Value], target_values: &[Value], size_driver: usize) -> Option<f64> {
    let donor_size = donor_values.get(size_driver)?.as_number()?;
    let target_size = target_values.get(size_driver)?.as_number()?;
    if donor_size > 0.0 && target_size > 0.0 {
        Some(donor_effort * (target_size / donor_size))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub estimate: f64,
    pub donors: Vec<Donor>,
    #[serde(rename = "config")]
    pub config_echo: SimilarityConfig,
    /// True when linear adaptation was requested and applied to every donor.
    pub adapted: bool,
    /// Donors whose effort could not be adapted.
    pub adaptation_fallbacks: Vec<CaseId>,
    /// Similarity features whose target value lies outside the training range.
    pub clamped: Vec<String>,
}

impl Prediction {
    /// Re-derives the estimate from the donor payload alone.
    pub fn recompute(&self) -> f64 {
        pool(&self.donors, self.config_echo.pooling)
    }
}

/// Retrieve, optionally adapt, then pool.
pub fn predict(
    target: &[Value],
    cases: &[&ProjectCase],
    resolved: &ResolvedSimilarity,
    ranges: &FeatureRanges,
) -> Result<Prediction, AnalogyError> {
    if resolved.features.iter().all(|f| target[f.index].is_missing()) {
        return Err(AnalogyError::AllMissingTarget);
    }
    let mut donors = retrieve(target, cases, resolved, ranges)?;
    let mut fallbacks = Vec::new();
    if let Some(driver) = resolved.size_driver {
        for d in &mut donors {
            let case = cases.iter().find(|c| c.id() == &d.case_id).expect("donor comes from the case base");
            match adapt_linear(d.effort, case.values(), target, driver) {
                Some(e) => d.adapted_effort = Some(e),
                None => fallbacks.push(d.case_id.clone()),
            }
        }
    }
    let clamped = resolved
        .features
        .iter()
        .zip(&ranges.0)
        .filter_map(|(f, r)| {
            let v = target[f.index].as_number()?;
            let (lo, hi) = (*r)?;
            (v < lo || v > hi).then(|| f.name.clone())
        })
        .collect();
    Ok(Prediction {
        estimate: pool(&donors, resolved.config.pooling),
        donors,
        config_echo: resolved.config.clone(),
        adapted: resolved.size_driver.is_some() && fallbacks.is_empty(),
        adaptation_fallbacks: fallbacks,
        clamped,
    })
}

/// A configuration bound to a training case base, with ranges precomputed.
#[derive(Debug, Clone)]
pub struct AnalogyModel<'a> {
    schema: &'a Schema,
    cases: Vec<&'a ProjectCase>,
    resolved: ResolvedSimilarity,
    ranges: FeatureRanges,
}

impl<'a> AnalogyModel<'a> {
    pub fn fit(schema: &'a Schema, cases: Vec<&'a ProjectCase>, config: &SimilarityConfig) -> Result<Self, AnalogyError> {
        let resolved = config.resolve(schema)?;
        Self::from_resolved(schema, cases, resolved)
    }

    pub fn from_resolved(schema: &'a Schema, cases: Vec<&'a ProjectCase>, resolved: ResolvedSimilarity) -> Result<Self, AnalogyError> {
        if cases.len() < resolved.config.k {
            return Err(AnalogyError::CaseBaseTooSmall { k: resolved.config.k, n: cases.len() });
        }
        let ranges = FeatureRanges::from_cases(schema, &cases, &resolved);
        Ok(AnalogyModel { schema, cases, resolved, ranges })
    }

    pub fn predict(&self, target: &[Value]) -> Result<Prediction, AnalogyError> {
        predict(target, &self.cases, &self.resolved, &self.ranges)
    }

    pub fn ranges(&self) -> &FeatureRanges {
        &self.ranges
    }

    pub fn resolved(&self) -> &ResolvedSimilarity {
        &self.resolved
    }

    pub fn schema(&self) -> &Schema {
        self.schema
    }

    pub fn cases(&self) -> &[&'a ProjectCase] {
        &self.cases
    }
}
