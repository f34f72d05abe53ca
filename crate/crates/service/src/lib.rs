//! Read-only JSON API over loaded case bases.
//!
//! Routes (all under `/api/v1`):
//!
//! | method | path                          |                                   |
//! |--------|-------------------------------|-----------------------------------|
//! | GET    | `/health`                     | version and loaded dataset labels |
//! | GET    | `/datasets`                   | schema, size and predictor ranges |
//! | GET    | `/datasets/{label}/cases/{id}`| predictor values of one case      |
//! | POST   | `/estimate`                   | analogy estimate with donors      |
//!
//! Estimates, distances, efforts and gaps travel as decimal strings that
//! parse back to the exact `f64` computed in process.

use std::collections::BTreeMap;
use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cbr_core::analogy::{feature_gaps, AnalogyError, AnalogyModel, SimilarityConfig};
use cbr_core::dataset::{format_number, FeatureKind, FeatureRole};
use cbr_core::{CaseId, Dataset, Value};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("refusing to start without any dataset")]
    NoDatasets,
    #[error("dataset label '{0}' is loaded twice")]
    DuplicateLabel(String),
    #[error("invalid CORS origin '{0}'")]
    BadOrigin(String),
    #[error("cannot bind {address}: {source}")]
    Bind { address: String, source: std::io::Error },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

/// Immutable state shared by all handlers.
#[derive(Debug)]
pub struct AppState {
    datasets: Vec<Dataset>,
}

impl AppState {
    pub fn new(datasets: Vec<Dataset>) -> Result<Arc<AppState>, ServiceError> {
        if datasets.is_empty() {
            return Err(ServiceError::NoDatasets);
        }
        for (i, d) in datasets.iter().enumerate() {
            if datasets[..i].iter().any(|e| e.label() == d.label()) {
                return Err(ServiceError::DuplicateLabel(d.label().to_string()));
            }
        }
        Ok(Arc::new(AppState { datasets }))
    }

    pub fn dataset(&self, label: &str) -> Option<&Dataset> {
        self.datasets.iter().find(|d| d.label() == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.datasets.iter().map(Dataset::label).collect()
    }
}

/// A rejected request: HTTP status, stable machine code and message.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct ApiFailure {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    code: &'a str,
}

impl IntoResponse for ApiFailure {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: &self.message, code: self.code })).into_response()
    }
}

fn fail(status: StatusCode, code: &'static str, error: impl ToString) -> ApiFailure {
    ApiFailure { status, code, message: error.to_string() }
}

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Result<Router, ServiceError> {
    let origin = match cors_origin {
        None | Some("*") => AllowOrigin::any(),
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).map_err(|_| ServiceError::BadOrigin(o.to_string()))?),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([axum::http::header::CONTENT_TYPE]);
    Ok(Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/datasets", get(datasets))
        .route("/api/v1/datasets/{label}/cases/{id}", get(case_detail))
        .route("/api/v1/estimate", post(estimate))
        .layer(cors)
        .with_state(state))
}

pub async fn bind(address: &str) -> Result<tokio::net::TcpListener, ServiceError> {
    tokio::net::TcpListener::bind(address)
        .await
        .map_err(|source| ServiceError::Bind { address: address.to_string(), source })
}

/// Serves on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    cors_origin: Option<&str>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let app = router(state, cors_origin)?;
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await.map_err(ServiceError::Serve)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub datasets: Vec<String>,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: VERSION.into(),
        datasets: state.labels().into_iter().map(String::from).collect(),
    })
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct FeatureSummary {
    pub name: String,
    pub kind: FeatureKind,
    pub role: FeatureRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    pub size_driver: bool,
    /// Range over the loaded case base; numeric predictors only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DatasetSummary {
    pub label: String,
    pub n: usize,
    pub provenance: String,
    pub features: Vec<FeatureSummary>,
}

fn summarize(ds: &Dataset) -> DatasetSummary {
    let cases = ds.case_refs();
    let features = ds
        .schema()
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let range = (f.role == FeatureRole::Predictor && f.kind.is_numeric())
                .then(|| cbr_core::dataset::feature_range(ds.schema(), i, &cases).ok())
                .flatten();
            FeatureSummary {
                name: f.name.clone(),
                kind: f.kind,
                role: f.role,
                units: (!f.units.is_empty()).then(|| f.units.clone()),
                size_driver: f.size_driver,
                min: range.map(|r| r.0),
                max: range.map(|r| r.1),
            }
        })
        .collect();
    DatasetSummary { label: ds.label().to_string(), n: ds.len(), provenance: ds.provenance().to_string(), features }
}

async fn datasets(State(state): State<Arc<AppState>>) -> Json<Vec<DatasetSummary>> {
    Json(state.datasets.iter().map(summarize).collect())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct CaseDetail {
    pub dataset: String,
    pub id: String,
    pub effort: String,
    /// Every predictor, with `null` for a missing value.
    pub values: BTreeMap<String, serde_json::Value>,
}

fn wire_value(v: &Value) -> serde_json::Value {
    match v {
        Value::Number(x) => serde_json::Number::from_f64(*x).map_or(serde_json::Value::Null, serde_json::Value::Number),
        Value::Category(s) => serde_json::Value::String(s.clone()),
        Value::Missing => serde_json::Value::Null,
    }
}

async fn case_detail(State(state): State<Arc<AppState>>, Path((label, id)): Path<(String, String)>) -> Response {
    let Some(ds) = state.dataset(&label) else {
        return fail(StatusCode::NOT_FOUND, "unknown-dataset", format!("no dataset '{label}'")).into_response();
    };
    let Some(case) = ds.case(&CaseId::new(id.clone())) else {
        return fail(StatusCode::NOT_FOUND, "unknown-case", format!("no case '{id}' in '{label}'")).into_response();
    };
    let values = ds
        .schema()
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| matches!(f.role, FeatureRole::Predictor | FeatureRole::Inactive))
        .map(|(i, f)| (f.name.clone(), wire_value(case.value(i))))
        .collect();
    Json(CaseDetail { dataset: label, id, effort: format_number(case.effort()), values }).into_response()
}

#[derive(Debug, Serialize, Deserialize, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EstimateRequest {
    pub dataset: String,
    /// Feature name → value; omitted features count as missing.
    pub target: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub config: SimilarityConfig,
}

#[derive(Debug, Serialize, Deserialize, Clone, PartialEq)]
pub struct WireGap {
    pub feature: String,
    /// Normalized gap in [0, 1]; `None` when the feature was skipped.
    pub gap: Option<String>,
}

#[derive(Debug, Serialize, Deserialize, Clone, PartialEq)]
pub struct WireDonor {
    pub rank: usize,
    pub case_id: String,
    pub distance: String,
    pub effort: String,
    pub adapted_effort: Option<String>,
    pub gaps: Vec<WireGap>,
}

#[derive(Debug, Serialize, Deserialize, Clone, PartialEq)]
pub struct EstimateResponse {
    pub dataset: String,
    pub estimate: String,
    pub donors: Vec<WireDonor>,
    pub config: SimilarityConfig,
    pub adapted: bool,
    pub warnings: Vec<String>,
}

/// Converts the JSON target map into schema-aligned values.
fn target_values(ds: &Dataset, target: &BTreeMap<String, serde_json::Value>) -> Result<Vec<Value>, ApiFailure> {
    let schema = ds.schema();
    let mut values = vec![Value::Missing; schema.features.len()];
    for (name, raw) in target {
        let Some(i) = schema.index_of(name) else {
            return Err(fail(StatusCode::BAD_REQUEST, "unknown-feature", format!("unknown feature '{name}'")));
        };
        if schema.features[i].role != FeatureRole::Predictor {
            return Err(fail(StatusCode::BAD_REQUEST, "not-predictor", format!("feature '{name}' is not an active predictor")));
        }
        let text = match raw {
            serde_json::Value::Null => continue,
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Bool(b) => b.to_string(),
            _ => return Err(fail(StatusCode::BAD_REQUEST, "bad-value", format!("feature '{name}': expected a scalar"))),
        };
        values[i] = schema
            .parse_value(i, &text)
            .map_err(|e| fail(StatusCode::BAD_REQUEST, "bad-value", format!("feature '{name}': {e}")))?;
    }
    Ok(values)
}

fn analogy_status(e: &AnalogyError) -> (StatusCode, &'static str) {
    match e {
        AnalogyError::AllMissingTarget | AnalogyError::EmptyEffectiveFeatures => (StatusCode::UNPROCESSABLE_ENTITY, "all-missing-target"),
        AnalogyError::UnknownFeature(_) => (StatusCode::BAD_REQUEST, "unknown-feature"),
        AnalogyError::NotPredictor(_) => (StatusCode::BAD_REQUEST, "not-predictor"),
        AnalogyError::InvalidK | AnalogyError::CaseBaseTooSmall { .. } => (StatusCode::BAD_REQUEST, "invalid-k"),
        _ => (StatusCode::BAD_REQUEST, "invalid-config"),
    }
}

/// The estimate the endpoint serves for `request`, computed in process.
pub fn compute_estimate(state: &AppState, request: &EstimateRequest) -> Result<EstimateResponse, ApiFailure> {
    let Some(ds) = state.dataset(&request.dataset) else {
        return Err(fail(StatusCode::BAD_REQUEST, "unknown-dataset", format!("no dataset '{}'", request.dataset)));
    };
    let values = target_values(ds, &request.target)?;
    let model = AnalogyModel::fit(ds.schema(), ds.case_refs(), &request.config).map_err(|e| {
        let (s, c) = analogy_status(&e);
        fail(s, c, e)
    })?;
    let prediction = model.predict(&values).map_err(|e| {
        let (s, c) = analogy_status(&e);
        fail(s, c, e)
    })?;
    let resolved = model.resolved();
    let donors = prediction
        .donors
        .iter()
        .map(|d| {
            let case = ds.case(&d.case_id).expect("donor is in the case base");
            let gaps = feature_gaps(&values, case.values(), resolved, model.ranges());
            WireDonor {
                rank: d.rank,
                case_id: d.case_id.to_string(),
                distance: format_number(d.distance),
                effort: format_number(d.effort),
                adapted_effort: d.adapted_effort.map(format_number),
                gaps: resolved
                    .features
                    .iter()
                    .zip(gaps)
                    .map(|(f, g)| WireGap { feature: f.name.clone(), gap: g.map(format_number) })
                    .collect(),
            }
        })
        .collect();
    let mut warnings: Vec<String> = prediction.clamped.iter().map(|f| format!("value of '{f}' lies outside the case-base range and was clamped")).collect();
    warnings.extend(prediction.adaptation_fallbacks.iter().map(|id| format!("donor '{id}' could not be size-adapted; its raw effort was used")));
    Ok(EstimateResponse {
        dataset: request.dataset.clone(),
        estimate: format_number(prediction.estimate),
        donors,
        config: prediction.config_echo.clone(),
        adapted: prediction.adapted,
        warnings,
    })
}

async fn estimate(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let request: EstimateRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return fail(StatusCode::BAD_REQUEST, "bad-request", e).into_response(),
    };
    match compute_estimate(&state, &request) {
        Ok(r) => Json(r).into_response(),
        Err(f) => f.into_response(),
    }
}
