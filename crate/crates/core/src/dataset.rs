//! Typed project datasets: a CSV case table plus a TOML schema sidecar.
//!
//! The schema assigns every column a [`FeatureRole`]. Values of
//! `excluded-peeking` columns (final LOC and similar late-availability
//! measures) are parsed and kept for faithful re-serialization, but they are
//! held in a private slot of [`ProjectCase`] that no accessor outside this
//! module can read.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cell tokens that mean "value unknown".
pub const MISSING_TOKENS: [&str; 2] = ["", "?"];

/// Token used when writing a missing value.
pub const CANONICAL_MISSING: &str = "?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    Boolean,
}

impl FeatureKind {
    /// Numeric and boolean features both live on the real line.
    pub fn is_numeric(self) -> bool {
        matches!(self, FeatureKind::Numeric | FeatureKind::Boolean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureRole {
    Predictor,
    Target,
    CaseId,
    ExcludedPeeking,
    Inactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
    pub role: FeatureRole,
    #[serde(default)]
    pub units: String,
    /// Eligible for linear size adaptation.
    #[serde(default)]
    pub size_driver: bool,
}

/// Feature definitions plus dataset-level metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub provenance: String,
    /// Optional numeric column giving completion order; when present the
    /// sensitivity analysis grows the training set chronologically.
    #[serde(default)]
    pub chronology: Option<String>,
    pub features: Vec<FeatureDef>,
}

impl Schema {
    pub fn from_toml_str(text: &str) -> Result<Schema, DatasetError> {
        let schema: Schema = toml::from_str(text).map_err(|e| DatasetError::SchemaSyntax(e.to_string()))?;
        let issues = schema.validate();
        if issues.is_empty() {
            Ok(schema)
        } else {
            Err(DatasetError::Invalid(issues))
        }
    }

    /// Checks the feature-definition invariants, returning every violation.
    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        let mut seen = HashSet::new();
        for f in &self.features {
            if f.name.trim().is_empty() {
                issues.push(Issue::schema("feature-name", "feature name must not be empty"));
            }
            if !seen.insert(f.name.as_str()) {
                issues.push(Issue::schema_col("unique-feature-name", &f.name, "duplicate feature name"));
            }
            if f.size_driver && !(f.kind == FeatureKind::Numeric && f.role == FeatureRole::Predictor) {
                issues.push(Issue::schema_col(
                    "size-driver",
                    &f.name,
                    "size_driver requires kind = numeric and role = predictor",
                ));
            }
        }
        let targets: Vec<&FeatureDef> = self.features.iter().filter(|f| f.role == FeatureRole::Target).collect();
        match targets.as_slice() {
            [] => issues.push(Issue::schema("single-target", "schema must declare exactly one feature with role = target")),
            [t] if t.kind != FeatureKind::Numeric => {
                issues.push(Issue::schema_col("target-kind", &t.name, "target feature must be numeric"))
            }
            [_] => {}
            _ => issues.push(Issue::schema("single-target", "schema declares more than one target feature")),
        }
        if self.features.iter().filter(|f| f.role == FeatureRole::CaseId).count() > 1 {
            issues.push(Issue::schema("single-case-id", "at most one feature may have role = case-id"));
        }
        if let Some(name) = &self.chronology {
            match self.features.iter().find(|f| &f.name == name) {
                None => issues.push(Issue::schema_col("chronology", name, "chronology names an unknown feature")),
                Some(f) if !f.kind.is_numeric() || f.role == FeatureRole::ExcludedPeeking => issues.push(
                    Issue::schema_col("chronology", name, "chronology feature must be numeric and not excluded-peeking"),
                ),
                Some(_) => {}
            }
        }
        issues
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureDef> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn target(&self) -> &FeatureDef {
        self.features
            .iter()
            .find(|f| f.role == FeatureRole::Target)
            .expect("validated schema has a target")
    }

    /// Features with role = predictor, in schema order.
    pub fn active_predictors(&self) -> Vec<&FeatureDef> {
        self.features.iter().filter(|f| f.role == FeatureRole::Predictor).collect()
    }

    /// Schema indices of the active predictors.
    pub fn predictor_indices(&self) -> Vec<usize> {
        (0..self.features.len())
            .filter(|&i| self.features[i].role == FeatureRole::Predictor)
            .collect()
    }

    /// Index of the first size-driver predictor.
    pub fn size_driver(&self) -> Option<usize> {
        self.features
            .iter()
            .position(|f| f.size_driver && f.role == FeatureRole::Predictor)
    }

    /// Parses one cell of feature `index` from text.
    pub fn parse_value(&self, index: usize, text: &str) -> Result<Value, String> {
        let def = &self.features[index];
        if MISSING_TOKENS.contains(&text.trim()) {
            return Ok(Value::Missing);
        }
        match def.kind {
            FeatureKind::Numeric => parse_finite(text).map(Value::Number),
            FeatureKind::Boolean => match text.trim() {
                "0" | "false" | "FALSE" | "False" => Ok(Value::Number(0.0)),
                "1" | "true" | "TRUE" | "True" => Ok(Value::Number(1.0)),
                other => Err(format!("'{other}' is not a boolean (expected 0/1)")),
            },
            FeatureKind::Categorical => Ok(Value::Category(text.to_string())),
        }
    }
}

fn parse_finite(text: &str) -> Result<f64, String> {
    let t = text.trim();
    // Rust's float parser is locale-independent but accepts "inf"/"NaN".
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("'{t}' is not a finite decimal number")),
    }
}

/// A single feature value.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Value {
    Number(f64),
    Category(String),
    #[default]
    Missing,
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }
}

/// Case identifier.
///
/// Ordering is natural: all-digit ids compare numerically and sort before
/// other ids, which compare lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaseId(String);

impl CaseId {
    pub fn new(id: impl Into<String>) -> Self {
        CaseId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric(&self) -> Option<u128> {
        if self.0.is_empty() || !self.0.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        self.0.parse().ok()
    }
}

impl Ord for CaseId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for CaseId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CaseId {
    fn from(s: &str) -> Self {
        CaseId(s.to_string())
    }
}

/// One completed project.
///
/// `values` is aligned with the schema's feature list. Slots for the target,
/// the case id and excluded-peeking features are always [`Value::Missing`]
/// there; the effort is carried separately.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectCase {
    id: CaseId,
    effort: f64,
    values: Vec<Value>,
    withheld: Vec<(usize, Value)>,
}

impl ProjectCase {
    /// Builds a case from schema-aligned values. Values supplied for
    /// non-predictor-facing slots are discarded.
    pub fn new(schema: &Schema, id: impl Into<CaseId>, effort: f64, mut values: Vec<Value>) -> Self {
        values.resize(schema.features.len(), Value::Missing);
        for (slot, def) in values.iter_mut().zip(&schema.features) {
            if matches!(def.role, FeatureRole::Target | FeatureRole::CaseId | FeatureRole::ExcludedPeeking) {
                *slot = Value::Missing;
            }
        }
        ProjectCase { id: id.into(), effort, values, withheld: Vec::new() }
    }

    pub fn id(&self) -> &CaseId {
        &self.id
    }

    pub fn effort(&self) -> f64 {
        self.effort
    }

    /// Schema-aligned values with excluded-peeking slots masked.
    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn value(&self, index: usize) -> &Value {
        &self.values[index]
    }
}

impl From<String> for CaseId {
    fn from(s: String) -> Self {
        CaseId(s)
    }
}

/// A validation finding, located by data row (1-based, header excluded)
/// and/or column where applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub row: Option<usize>,
    pub column: Option<String>,
    pub rule: &'static str,
    pub message: String,
}

impl Issue {
    fn schema(rule: &'static str, message: &str) -> Issue {
        Issue { row: None, column: None, rule, message: message.to_string() }
    }

    fn schema_col(rule: &'static str, column: &str, message: &str) -> Issue {
        Issue { row: None, column: Some(column.to_string()), rule, message: message.to_string() }
    }

    fn cell(rule: &'static str, row: usize, column: &str, message: String) -> Issue {
        Issue { row: Some(row), column: Some(column.to_string()), rule, message }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(row) = self.row {
            write!(f, "row {row}: ")?;
        }
        if let Some(col) = &self.column {
            write!(f, "column '{col}': ")?;
        }
        write!(f, "{} [{}]", self.message, self.rule)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema syntax: {0}")]
    SchemaSyntax(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{}", format_issues(.0))]
    Invalid(Vec<Issue>),
    #[error("unknown feature '{0}'")]
    UnknownFeature(String),
    #[error("feature '{0}' is not numeric")]
    NotNumeric(String),
    #[error("feature '{0}' is not accessible to predictors")]
    NotAccessible(String),
    #[error("feature '{0}' has no non-missing value in the case subset")]
    AllMissing(String),
    #[error("case subset is empty")]
    EmptySubset,
}

fn format_issues(issues: &[Issue]) -> String {
    let lines: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
    format!("{} issue(s): {}", issues.len(), lines.join("; "))
}

impl DatasetError {
    /// Findings carried by a validation failure, or a single synthetic one.
    pub fn issues(&self) -> Vec<Issue> {
        match self {
            DatasetError::Invalid(issues) => issues.clone(),
            other => vec![Issue { row: None, column: None, rule: "readable", message: other.to_string() }],
        }
    }
}

/// An immutable, validated case collection.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Schema,
    cases: Vec<ProjectCase>,
    label: String,
}

impl Dataset {
    /// Loads `csv_path` against the schema sidecar at `schema_path`.
    pub fn load(csv_path: impl AsRef<Path>, schema_path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
        let schema_text = read(schema_path.as_ref())?;
        let csv_text = read(csv_path.as_ref())?;
        let schema = Schema::from_toml_str(&schema_text)?;
        let fallback_label = csv_path
            .as_ref()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string());
        Dataset::from_csv_str(&csv_text, schema, fallback_label)
    }

    /// Parses CSV text against an already-validated schema, collecting every
    /// row-level issue before failing.
    pub fn from_csv_str(csv_text: &str, schema: Schema, fallback_label: impl Into<String>) -> Result<Dataset, DatasetError> {
        let schema_issues = schema.validate();
        if !schema_issues.is_empty() {
            return Err(DatasetError::Invalid(schema_issues));
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(csv_text.as_bytes());
        let headers = reader.headers().map_err(|e| DatasetError::Csv(e.to_string()))?.clone();

        let mut issues = Vec::new();
        // column position -> schema index
        let mut column_map = Vec::with_capacity(headers.len());
        let mut seen_cols = HashSet::new();
        for h in headers.iter() {
            if !seen_cols.insert(h) {
                issues.push(Issue::schema_col("unique-column", h, "duplicate column in CSV header"));
            }
            match schema.index_of(h) {
                Some(i) => column_map.push(Some(i)),
                None => {
                    issues.push(Issue::schema_col("known-column", h, "unknown column (not declared in schema)"));
                    column_map.push(None);
                }
            }
        }
        for f in &schema.features {
            if !headers.iter().any(|h| h == f.name) {
                issues.push(Issue::schema_col("declared-column-present", &f.name, "schema feature has no CSV column"));
            }
        }
        if !issues.is_empty() {
            return Err(DatasetError::Invalid(issues));
        }

        let target_index = schema.features.iter().position(|f| f.role == FeatureRole::Target).unwrap();
        let id_index = schema.features.iter().position(|f| f.role == FeatureRole::CaseId);
        let mut cases = Vec::new();
        let mut ids = HashSet::new();
        for (r, record) in reader.records().enumerate() {
            let row = r + 1;
            let record = match record {
                Ok(rec) => rec,
                Err(e) => {
                    issues.push(Issue { row: Some(row), column: None, rule: "csv-syntax", message: e.to_string() });
                    continue;
                }
            };
            let mut cells: Vec<&str> = vec![""; schema.features.len()];
            for (pos, cell) in record.iter().enumerate() {
                if let Some(Some(i)) = column_map.get(pos) {
                    cells[*i] = cell;
                }
            }
            let id = match id_index {
                Some(i) => {
                    let text = cells[i].trim();
                    if MISSING_TOKENS.contains(&text) {
                        issues.push(Issue::cell("case-id-present", row, &schema.features[i].name, "case id is missing".into()));
                        continue;
                    }
                    CaseId::new(text)
                }
                None => CaseId::new(row.to_string()),
            };
            if !ids.insert(id.clone()) {
                let column = id_index.map(|i| schema.features[i].name.clone()).unwrap_or_default();
                issues.push(Issue {
                    row: Some(row),
                    column: Some(column),
                    rule: "unique-case-id",
                    message: format!("duplicate case id '{id}'"),
                });
            }
            let target_name = &schema.features[target_index].name;
            let effort = match schema.parse_value(target_index, cells[target_index]) {
                Ok(Value::Number(v)) if v > 0.0 => Some(v),
                Ok(Value::Number(v)) => {
                    issues.push(Issue::cell("target-positive", row, target_name, format!("target value {v} must be strictly positive")));
                    None
                }
                Ok(_) => {
                    issues.push(Issue::cell("target-present", row, target_name, "target value is missing".into()));
                    None
                }
                Err(msg) => {
                    issues.push(Issue::cell("numeric-cell", row, target_name, msg));
                    None
                }
            };
            let mut values = vec![Value::Missing; schema.features.len()];
            let mut withheld = Vec::new();
            for (i, def) in schema.features.iter().enumerate() {
                if matches!(def.role, FeatureRole::Target | FeatureRole::CaseId) {
                    continue;
                }
                match schema.parse_value(i, cells[i]) {
                    Ok(v) if def.role == FeatureRole::ExcludedPeeking => withheld.push((i, v)),
                    Ok(v) => values[i] = v,
                    Err(msg) => issues.push(Issue::cell("kind-conformance", row, &def.name, msg)),
                }
            }
            if let Some(effort) = effort {
                cases.push(ProjectCase { id, effort, values, withheld });
            }
        }
        if cases.is_empty() && issues.is_empty() {
            issues.push(Issue::schema("non-empty", "dataset has no cases"));
        }
        if !issues.is_empty() {
            return Err(DatasetError::Invalid(issues));
        }
        let label = schema.label.clone().unwrap_or_else(|| fallback_label.into());
        Ok(Dataset { schema, cases, label })
    }

    /// Builds a dataset from in-memory cases (for example synthetic data).
    pub fn new(schema: Schema, cases: Vec<ProjectCase>, label: impl Into<String>) -> Result<Dataset, DatasetError> {
        let mut issues = schema.validate();
        let mut ids = HashSet::new();
        for (r, c) in cases.iter().enumerate() {
            if !ids.insert(c.id.clone()) {
                issues.push(Issue { row: Some(r + 1), column: None, rule: "unique-case-id", message: format!("duplicate case id '{}'", c.id) });
            }
            if !(c.effort.is_finite() && c.effort > 0.0) {
                issues.push(Issue { row: Some(r + 1), column: None, rule: "target-positive", message: "effort must be finite and > 0".into() });
            }
            for (i, v) in c.values.iter().enumerate() {
                let ok = match (schema.features[i].kind, v) {
                    (_, Value::Missing) => true,
                    (FeatureKind::Numeric, Value::Number(x)) => x.is_finite(),
                    (FeatureKind::Boolean, Value::Number(x)) => *x == 0.0 || *x == 1.0,
                    (FeatureKind::Categorical, Value::Category(_)) => true,
                    _ => false,
                };
                if !ok {
                    issues.push(Issue::cell("kind-conformance", r + 1, &schema.features[i].name, "value does not conform to feature kind".into()));
                }
            }
        }
        if cases.is_empty() {
            issues.push(Issue::schema("non-empty", "dataset has no cases"));
        }
        if !issues.is_empty() {
            return Err(DatasetError::Invalid(issues));
        }
        Ok(Dataset { schema, cases, label: label.into() })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn cases(&self) -> &[ProjectCase] {
        &self.cases
    }

    pub fn case_refs(&self) -> Vec<&ProjectCase> {
        self.cases.iter().collect()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn provenance(&self) -> &str {
        &self.schema.provenance
    }

    pub fn case(&self, id: &CaseId) -> Option<&ProjectCase> {
        self.cases.iter().find(|c| &c.id == id)
    }

    pub fn efforts(&self) -> Vec<f64> {
        self.cases.iter().map(|c| c.effort).collect()
    }

    pub fn active_predictors(&self) -> Vec<&FeatureDef> {
        self.schema.active_predictors()
    }

    /// Min and max of a numeric feature over `subset`, skipping missing values.
    pub fn feature_range(&self, feature: &str, subset: &[&ProjectCase]) -> Result<(f64, f64), DatasetError> {
        let index = self.schema.index_of(feature).ok_or_else(|| DatasetError::UnknownFeature(feature.to_string()))?;
        feature_range(&self.schema, index, subset)
    }

    /// Serializes in canonical form: schema column order, shortest
    /// round-trip decimal numbers, `?` for missing, `\n` line endings.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer
            .write_record(self.schema.features.iter().map(|f| f.name.as_str()))
            .expect("in-memory write");
        for case in &self.cases {
            let row: Vec<String> = self
                .schema
                .features
                .iter()
                .enumerate()
                .map(|(i, def)| match def.role {
                    FeatureRole::Target => format_number(case.effort),
                    FeatureRole::CaseId => case.id.0.clone(),
                    FeatureRole::ExcludedPeeking => case
                        .withheld
                        .iter()
                        .find(|(j, _)| *j == i)
                        .map(|(_, v)| format_value(v))
                        .unwrap_or_else(|| CANONICAL_MISSING.to_string()),
                    _ => format_value(&case.values[i]),
                })
                .collect();
            writer.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8 input stays utf-8")
    }
}

fn read(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

fn format_value(v: &Value) -> String {
    match v {
        Value::Number(x) => format_number(*x),
        Value::Category(s) => s.clone(),
        Value::Missing => CANONICAL_MISSING.to_string(),
    }
}

/// Min and max of feature `index` over the non-missing values in `subset`.
pub fn feature_range(schema: &Schema, index: usize, subset: &[&ProjectCase]) -> Result<(f64, f64), DatasetError> {
    let def = &schema.features[index];
    if def.role == FeatureRole::ExcludedPeeking {
        return Err(DatasetError::NotAccessible(def.name.clone()));
    }
    if !def.kind.is_numeric() {
        return Err(DatasetError::NotNumeric(def.name.clone()));
    }
    if subset.is_empty() {
        return Err(DatasetError::EmptySubset);
    }
    subset
        .iter()
        .filter_map(|c| c.values[index].as_number())
        .fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .ok_or_else(|| DatasetError::AllMissing(def.name.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = r#"
        [[features]]
        name = "id"
        kind = "categorical"
        role = "case-id"

        [[features]]
        name = "size"
        kind = "numeric"
        role = "predictor"
        size_driver = true

        [[features]]
        name = "team"
        kind = "numeric"
        role = "predictor"

        [[features]]
        name = "LOC"
        kind = "numeric"
        role = "excluded-peeking"

        [[features]]
        name = "effort"
        kind = "numeric"
        role = "target"
    "#;

    fn schema() -> Schema {
        Schema::from_toml_str(SCHEMA).unwrap()
    }

    fn load(csv: &str) -> Result<Dataset, DatasetError> {
        Dataset::from_csv_str(csv, schema(), "t")
    }

    #[test]
    fn three_rows_parse() {
        let ds = load("id,size,team,LOC,effort\na,2,3,100,10\nb,5,4,200,20\nc,11,5,300,30\n").unwrap();
        assert_eq!(ds.len(), 3);
        for c in ds.cases() {
            assert!(c.values()[1].as_number().unwrap().is_finite());
        }
    }

    #[test]
    fn header_order_is_free() {
        let ds = load("effort,LOC,team,size,id\n10,100,3,2,a\n").unwrap();
        assert_eq!(ds.cases()[0].value(1), &Value::Number(2.0));
        assert_eq!(ds.cases()[0].effort(), 10.0);
    }

    #[test]
    fn peeking_column_loads_but_is_masked() {
        let ds = load("id,size,team,LOC,effort\na,2,3,100,10\n").unwrap();
        let loc = ds.schema().index_of("LOC").unwrap();
        assert_eq!(ds.cases()[0].value(loc), &Value::Missing);
        assert!(ds.active_predictors().iter().all(|f| f.name != "LOC"));
        assert!(matches!(ds.feature_range("LOC", &ds.case_refs()), Err(DatasetError::NotAccessible(_))));
        // Still written back out faithfully.
        assert!(ds.to_csv_string().contains("a,2,3,100,10"));
    }

    #[test]
    fn zero_effort_names_row_and_rule() {
        let err = load("id,size,team,LOC,effort\na,2,3,100,10\nb,5,4,200,0\n").unwrap_err();
        let issues = err.issues();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].row, Some(2));
        assert_eq!(issues[0].rule, "target-positive");
    }

    #[test]
    fn missing_target_is_an_error() {
        let err = load("id,size,team,LOC,effort\na,2,3,100,?\n").unwrap_err();
        assert_eq!(err.issues()[0].rule, "target-present");
    }

    #[test]
    fn unknown_column_rejected() {
        let err = load("id,size,team,LOC,effort,extra\na,2,3,100,10,1\n").unwrap_err();
        assert!(err.issues().iter().any(|i| i.rule == "known-column" && i.column.as_deref() == Some("extra")));
    }

    #[test]
    fn duplicate_id_rejected() {
        let err = load("id,size,team,LOC,effort\na,2,3,100,10\na,5,4,200,20\n").unwrap_err();
        let issue = &err.issues()[0];
        assert_eq!(issue.rule, "unique-case-id");
        assert!(issue.message.contains("'a'"));
    }

    #[test]
    fn non_numeric_text_rejected() {
        let err = load("id,size,team,LOC,effort\na,big,3,100,10\n").unwrap_err();
        let issue = &err.issues()[0];
        assert_eq!(issue.column.as_deref(), Some("size"));
        assert_eq!(issue.rule, "kind-conformance");
        // Comma decimal separators are not numbers here.
        assert!(load("id,size,team,LOC,effort\na,\"2,5\",3,100,10\n").is_err());
        assert!(load("id,size,team,LOC,effort\na,inf,3,100,10\n").is_err());
    }

    #[test]
    fn missing_markers() {
        let ds = load("id,size,team,LOC,effort\na,?,,100,10\n").unwrap();
        assert!(ds.cases()[0].value(1).is_missing());
        assert!(ds.cases()[0].value(2).is_missing());
    }

    #[test]
    fn row_index_is_id_without_case_id_feature() {
        let text = SCHEMA.replace("role = \"case-id\"", "role = \"inactive\"");
        let schema = Schema::from_toml_str(&text).unwrap();
        let ds = Dataset::from_csv_str("id,size,team,LOC,effort\nx,2,3,100,10\nx,5,4,200,20\n", schema, "t").unwrap();
        assert_eq!(ds.cases()[1].id().as_str(), "2");
    }

    #[test]
    fn schema_rules() {
        let no_target = SCHEMA.replace("role = \"target\"", "role = \"inactive\"");
        let err = Schema::from_toml_str(&no_target).unwrap_err();
        assert!(err.issues().iter().any(|i| i.rule == "single-target"));

        let bad_driver = SCHEMA.replace("role = \"predictor\"\n        size_driver", "role = \"inactive\"\n        size_driver");
        let err = Schema::from_toml_str(&bad_driver).unwrap_err();
        assert!(err.issues().iter().any(|i| i.rule == "size-driver"));

        let unknown_key = format!("{SCHEMA}\n        colour = \"red\"\n");
        assert!(matches!(Schema::from_toml_str(&unknown_key), Err(DatasetError::SchemaSyntax(_))));
    }

    #[test]
    fn active_predictors_filter_and_order() {
        let mut text = String::new();
        for i in 0..10 {
            let role = if i == 3 || i == 7 { "inactive" } else { "predictor" };
            text.push_str(&format!("[[features]]\nname = \"f{i}\"\nkind = \"numeric\"\nrole = \"{role}\"\n\n"));
        }
        text.push_str("[[features]]\nname = \"effort\"\nkind = \"numeric\"\nrole = \"target\"\n");
        let schema = Schema::from_toml_str(&text).unwrap();
        let names: Vec<&str> = schema.active_predictors().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["f0", "f1", "f2", "f4", "f5", "f6", "f8", "f9"]);

        let only_target = Schema::from_toml_str("[[features]]\nname = \"e\"\nkind = \"numeric\"\nrole = \"target\"\n").unwrap();
        assert!(only_target.active_predictors().is_empty());
    }

    #[test]
    fn ranges() {
        let ds = load("id,size,team,LOC,effort\na,2,3,1,10\nb,5,?,1,20\nc,11,9,1,30\n").unwrap();
        let all = ds.case_refs();
        assert_eq!(ds.feature_range("size", &all).unwrap(), (2.0, 11.0));
        assert_eq!(ds.feature_range("size", &all[..1]).unwrap(), (2.0, 2.0));
        assert_eq!(ds.feature_range("team", &all).unwrap(), (3.0, 9.0));
        assert!(matches!(ds.feature_range("team", &all[1..2]), Err(DatasetError::AllMissing(_))));
    }

    #[test]
    fn case_id_natural_order() {
        let mut ids: Vec<CaseId> = ["10", "2", "b", "A", "1"].iter().map(|s| CaseId::from(*s)).collect();
        ids.sort();
        let s: Vec<&str> = ids.iter().map(|i| i.as_str()).collect();
        assert_eq!(s, ["1", "2", "10", "A", "b"]);
    }

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        let text = "id,size,team,LOC,effort\na,2.5,?,100,10\n\"b,c\",5,4,?,20.25\n";
        let ds = load(text).unwrap();
        assert_eq!(ds.to_csv_string(), text);
    }
}
