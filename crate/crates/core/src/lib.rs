//! Analogy-based (case-based reasoning) software project effort estimation.
//!
//! Completed projects with known effort form a case base. A new project is
//! placed in the same min-max rescaled feature space, its `k` nearest
//! completed projects are retrieved as donors, and their efforts are pooled
//! (optionally after linear size adaptation) into an estimate that carries
//! its own explanation: the ranked donor list.
//!
//! Around the engine sits the validation toolkit:
//!
//! * [`dataset`]: CSV + schema loading with feature roles, including the
//!   `excluded-peeking` role for features that are unknown at estimation time.
//! * [`analogy`]: normalization, weighted distance, retrieval, pooling, adaptation.
//! * [`regression`]: OLS and forward stepwise selection as the benchmark predictor.
//! * [`metrics`]: MMRE, MdMRE, Pred(l), MAR, Standardised Accuracy, percentile
//!   bootstrap intervals and Cohen's d.
//! * [`harness`]: leave-one-out evaluation, wrapper subset search,
//!   training-set-size sensitivity curves and vote counting.
//!
//! Data-parallel loops (folds, resamples, subsets, repeats) run on rayon when
//! the `parallel` feature is enabled; [`Execution::Sequential`] forces the
//! single-threaded path and produces identical results.

pub mod analogy;
pub mod config;
pub mod dataset;
mod exec;
pub mod harness;
pub mod metrics;
pub mod regression;
pub mod stats;

pub use analogy::{
    AnalogyModel, Donor, FeatureRanges, Pooling, Prediction, ResolvedSimilarity,
    SimilarityConfig,
};
pub use dataset::{CaseId, Dataset, FeatureDef, FeatureKind, FeatureRole, ProjectCase, Schema, Value};
pub use exec::Execution;
pub use metrics::{Metric, MetricResult, ResidualEntry, ResidualSet};
pub use regression::{RegressionModel, Transform};
