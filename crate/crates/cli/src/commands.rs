use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cbr_core::analogy::SimilarityConfig;
use cbr_core::config::{ConfigError, ExperimentConfig, NamedPredictor};
use cbr_core::dataset::{format_number, DatasetError, Schema};
use cbr_core::harness::{
    compare_residuals, loocv, paired_effect_size, read_comparison_records, sensitivity_curve, subset_search, vote_count,
    ComparisonRecord, HarnessError, LoocvRun, Nesting, PredictorSpec, Verdict,
};
use cbr_core::metrics::{bootstrap_ci, random_guess_mar, BootstrapOptions, Metric, MetricError, MetricResult, ResidualSet};
use cbr_core::{Dataset, Execution};
use thiserror::Error;

use crate::report::{Cell, DatasetHash, Format, RunManifest, Staging, Summary, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Invalid(issues) => {
                CliError::Data(issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("writing report: {e}"))
    }
}

/// Settings shared by the experiment subcommands.
pub struct RunOptions {
    pub config_path: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub format: Format,
}

pub struct Loaded {
    pub config: ExperimentConfig,
    pub config_bytes: Vec<u8>,
    pub datasets: Vec<Dataset>,
    pub hashes: Vec<DatasetHash>,
    pub seed: u64,
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<Loaded, CliError> {
    let config_bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let text = String::from_utf8(config_bytes.clone()).map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let config = ExperimentConfig::from_toml_str(&text, base).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut datasets = Vec::new();
    let mut hashes = Vec::new();
    for entry in &config.datasets {
        let csv_path = config.resolve_path(&entry.csv);
        let schema_path = config.resolve_path(&entry.schema);
        let csv_bytes = read_file(&csv_path)?;
        let schema_bytes = read_file(&schema_path)?;
        let context = |e: DatasetError| -> CliError {
            match CliError::from(e) {
                CliError::Data(m) => CliError::Data(format!("{}: {m}", csv_path.display())),
                other => other,
            }
        };
        let schema = Schema::from_toml_str(&String::from_utf8_lossy(&schema_bytes)).map_err(context)?;
        let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
        let mut ds = Dataset::from_csv_str(&String::from_utf8_lossy(&csv_bytes), schema, stem).map_err(context)?;
        if let Some(label) = &entry.label {
            ds = Dataset::new(ds.schema().clone(), ds.cases().to_vec(), label.clone()).map_err(context)?;
        }
        if datasets.iter().any(|d: &Dataset| d.label() == ds.label()) {
            return Err(CliError::Config(format!("dataset label '{}' is used twice", ds.label())));
        }
        hashes.push(DatasetHash {
            label: ds.label().to_string(),
            csv_sha256: crate::report::sha256_hex(&csv_bytes),
            schema_sha256: crate::report::sha256_hex(&schema_bytes),
        });
        datasets.push(ds);
    }
    let seed = seed.unwrap_or(config.seed);
    Ok(Loaded { config, config_bytes, datasets, hashes, seed })
}

fn require_datasets(l: &Loaded) -> Result<(), CliError> {
    if l.datasets.is_empty() {
        return Err(CliError::Config("config lists no datasets".into()));
    }
    Ok(())
}

fn require_predictors(l: &Loaded, min: usize) -> Result<(), CliError> {
    if l.config.predictors.len() < min {
        return Err(CliError::Config(format!("config needs at least {min} predictor(s), found {}", l.config.predictors.len())));
    }
    Ok(())
}

fn bootstrap_opts(l: &Loaded) -> BootstrapOptions {
    BootstrapOptions { b: l.config.bootstrap.b, level: l.config.bootstrap.level, seed: l.seed }
}

fn baseline(ds: &Dataset, metrics: &[Metric]) -> Result<Option<f64>, CliError> {
    if metrics.iter().any(|m| m.needs_baseline()) {
        Ok(Some(random_guess_mar(&ds.efforts())?))
    } else {
        Ok(None)
    }
}

fn residual_table() -> Table {
    Table::new("residuals", &["dataset", "predictor", "case_id", "actual", "predicted", "residual", "abs_residual", "mre", "fallback"])
}

fn push_residuals(t: &mut Table, set: &ResidualSet) {
    for e in &set.entries {
        t.push(vec![
            set.dataset_label.clone().into(),
            set.predictor_label.clone().into(),
            e.case_id.to_string().into(),
            e.actual.into(),
            e.predicted.into(),
            (e.actual - e.predicted).into(),
            e.abs_residual().into(),
            e.mre().into(),
            e.fallback.into(),
        ]);
    }
}

fn metric_table() -> Table {
    Table::new("metrics", &["dataset", "predictor", "metric", "value", "ci_low", "ci_high", "confidence_level", "n", "bootstrap_b", "seed"])
}

/// Point values with bootstrap intervals for every configured metric.
pub fn metric_results(l: &Loaded, ds: &Dataset, set: &ResidualSet, exec: Execution) -> Result<Vec<MetricResult>, CliError> {
    let base = baseline(ds, &l.config.metrics)?;
    l.config
        .metrics
        .iter()
        .map(|&m| bootstrap_ci(set, m, base, bootstrap_opts(l), exec).map_err(CliError::from))
        .collect()
}

fn push_metrics(t: &mut Table, set: &ResidualSet, results: &[MetricResult]) {
    for r in results {
        t.push(vec![
            set.dataset_label.clone().into(),
            set.predictor_label.clone().into(),
            r.name.clone().into(),
            r.value.into(),
            r.ci_low.into(),
            r.ci_high.into(),
            r.confidence_level.into(),
            r.n.into(),
            r.bootstrap_b.into(),
            r.seed.into(),
        ]);
    }
}

fn spread(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    let median = if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 };
    (v[0], median, v[v.len() - 1])
}

fn summarize_run(s: &mut Summary, set: &ResidualSet, results: &[MetricResult], note: Option<&str>) {
    s.heading(&format!("{} / {}", set.dataset_label, set.predictor_label));
    let mut line = format!("cases: {}, fallback predictions: {}", set.len(), set.fallbacks());
    if let Some(n) = note {
        line.push_str(&format!(", {n}"));
    }
    s.line(&line);
    let level = results.first().map_or(0.95, |r| r.confidence_level);
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| vec![r.name.clone(), format_number(r.value), format_number(r.ci_low), format_number(r.ci_high)])
        .collect();
    let ci = format!("{}% CI", format_number(level * 100.0));
    s.table(&["metric", "value", &format!("{ci} low"), &format!("{ci} high")], &rows);
    let (lo, med, hi) = spread(&set.abs_residuals());
    s.line(&format!(
        "absolute residual spread: min {}, median {}, max {}",
        format_number(lo),
        format_number(med),
        format_number(hi)
    ));
}

/// Every predictor's full settings, so the regression transform and pooling
/// rule in use are on record.
fn predictor_settings(s: &mut Summary, predictors: &[NamedPredictor]) {
    if predictors.is_empty() {
        return;
    }
    s.heading("Predictors");
    let rows: Vec<Vec<String>> = predictors
        .iter()
        .map(|p| vec![p.label.clone(), format!("`{}`", serde_json::to_string(&p.spec).expect("spec serializes"))])
        .collect();
    s.table(&["label", "settings"], &rows);
}

fn run_predictor(ds: &Dataset, p: &NamedPredictor, seed: u64, exec: Execution) -> Result<LoocvRun, CliError> {
    let mut run = loocv(ds, &p.spec, seed, exec).map_err(|e| CliError::Data(format!("{} / {}: {e}", ds.label(), p.label)))?;
    run.residuals.predictor_label = p.label.clone();
    Ok(run)
}

fn emit(opts: &RunOptions, manifest: &RunManifest, tables: &[Table], summary: Summary, extra: &[(&str, String)]) -> Result<Vec<PathBuf>, CliError> {
    let mut staging = Staging::new(&opts.out)?;
    for t in tables {
        staging.write(&t.file_name(opts.format), &t.render(opts.format))?;
    }
    for (name, body) in extra {
        staging.write(name, body.as_bytes())?;
    }
    staging.write("summary.md", summary.finish().as_bytes())?;
    staging.write("manifest.json", manifest.to_json().as_bytes())?;
    Ok(staging.commit(&opts.out)?)
}

pub fn cmd_loocv(opts: &RunOptions, exec: Execution) -> Result<Vec<PathBuf>, CliError> {
    let l = load_config(&opts.config_path, opts.seed)?;
    require_datasets(&l)?;
    require_predictors(&l, 1)?;
    let manifest = RunManifest::new("loocv", &l.config_bytes, l.hashes.clone(), l.seed);
    let mut summary = Summary::new("Leave-one-out evaluation", &manifest);
    predictor_settings(&mut summary, &l.config.predictors);
    let (mut residuals, mut metrics) = (residual_table(), metric_table());
    for ds in &l.datasets {
        for p in &l.config.predictors {
            let run = run_predictor(ds, p, l.seed, exec)?;
            let results = metric_results(&l, ds, &run.residuals, exec)?;
            push_residuals(&mut residuals, &run.residuals);
            push_metrics(&mut metrics, &run.residuals, &results);
            summarize_run(&mut summary, &run.residuals, &results, None);
        }
    }
    emit(opts, &manifest, &[residuals, metrics], summary, &[])
}

fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::ABetter => "a-better",
        Verdict::BBetter => "b-better",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn vote_table() -> Table {
    Table::new("votes", &["source", "group", "results_plus", "results_minus", "results_equal"])
}

pub fn cmd_compare(opts: &RunOptions, exec: Execution) -> Result<Vec<PathBuf>, CliError> {
    let l = load_config(&opts.config_path, opts.seed)?;
    let eps = l.config.compare.epsilon;
    if l.config.compare.records.is_empty() {
        require_datasets(&l)?;
        require_predictors(&l, 2)?;
    } else if !l.datasets.is_empty() {
        require_predictors(&l, 2)?;
    }
    let manifest = RunManifest::new("compare", &l.config_bytes, l.hashes.clone(), l.seed);
    let mut summary = Summary::new("Predictor comparison", &manifest);
    predictor_settings(&mut summary, &l.config.predictors);
    let (mut residuals, mut metrics) = (residual_table(), metric_table());
    let mut comparisons = Table::new(
        "comparisons",
        &["dataset", "predictor_a", "predictor_b", "metric", "value_a", "value_b", "verdict", "cohens_d", "d_ci_low", "d_ci_high"],
    );
    let mut computed: Vec<ComparisonRecord> = Vec::new();
    for ds in &l.datasets {
        let runs: Vec<LoocvRun> = l.config.predictors.iter().map(|p| run_predictor(ds, p, l.seed, exec)).collect::<Result<_, _>>()?;
        for run in &runs {
            let results = metric_results(&l, ds, &run.residuals, exec)?;
            push_residuals(&mut residuals, &run.residuals);
            push_metrics(&mut metrics, &run.residuals, &results);
        }
        let base = baseline(ds, &l.config.metrics)?;
        summary.heading(&format!("{}: paired comparisons", ds.label()));
        let mut rows = Vec::new();
        for i in 0..runs.len() {
            for j in i + 1..runs.len() {
                let (a, b) = (&runs[i].residuals, &runs[j].residuals);
                let (records, _) = compare_residuals(a, b, &l.config.metrics, base, eps)?;
                let d_ci = paired_effect_size(a, b, bootstrap_opts(&l), exec)?;
                for r in records {
                    comparisons.push(vec![
                        r.dataset_label.clone().into(),
                        r.predictor_a.clone().into(),
                        r.predictor_b.clone().into(),
                        r.metric.clone().into(),
                        r.value_a.into(),
                        r.value_b.into(),
                        verdict_text(r.verdict).into(),
                        d_ci.value.into(),
                        d_ci.low.into(),
                        d_ci.high.into(),
                    ]);
                    rows.push(vec![
                        format!("{} vs {}", r.predictor_a, r.predictor_b),
                        r.metric.clone(),
                        format_number(r.value_a),
                        format_number(r.value_b),
                        verdict_text(r.verdict).to_string(),
                        format!("{} [{}, {}]", format_number(d_ci.value), format_number(d_ci.low), format_number(d_ci.high)),
                    ]);
                    computed.push(ComparisonRecord { group: format!("{} vs {} on {}", r.predictor_a, r.predictor_b, r.metric), ..r });
                }
            }
        }
        summary.table(&["pair", "metric", "a", "b", "verdict", "Cohen's d [CI]"], &rows);
    }

    let mut votes = vote_table();
    let mut blocks: Vec<(String, Vec<cbr_core::harness::VoteRow>)> = Vec::new();
    if l.datasets.len() > 1 {
        blocks.push(("computed".into(), vote_count(&computed, eps)?));
    }
    for path in &l.config.compare.records {
        let path = l.config.resolve_path(path);
        let text = String::from_utf8(read_file(&path)?).map_err(|_| CliError::Data(format!("{}: not UTF-8", path.display())))?;
        let records = read_comparison_records(&text, eps).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let source = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        blocks.push((source, vote_count(&records, eps)?));
    }
    if !blocks.is_empty() {
        summary.heading(&format!("Vote count (epsilon {}%)", format_number(eps)));
        let mut rows = Vec::new();
        for (source, block) in &blocks {
            for v in block {
                votes.push(vec![source.clone().into(), v.group.clone().into(), v.plus.into(), v.minus.into(), v.equal.into()]);
                rows.push(vec![source.clone(), v.group.clone(), v.plus.to_string(), v.minus.to_string(), v.equal.to_string()]);
            }
        }
        summary.table(&["source", "group", "Results+", "Results-", "Results="], &rows);
    }
    emit(opts, &manifest, &[residuals, metrics, comparisons, votes], summary, &[])
}

fn analogy_base(l: &Loaded, label: Option<&str>) -> Result<SimilarityConfig, CliError> {
    let named = match label {
        Some(label) => Some(l.config.predictor(label).ok_or_else(|| CliError::Config(format!("no predictor '{label}'")))?),
        None => l.config.predictors.iter().find(|p| matches!(p.spec, PredictorSpec::Analogy(_))),
    };
    match named.map(|p| &p.spec) {
        Some(PredictorSpec::Analogy(c)) => Ok(c.clone()),
        Some(_) => Err(CliError::Config(format!("predictor '{}' is not an analogy predictor", label.unwrap_or_default()))),
        None => Ok(SimilarityConfig::default()),
    }
}

pub fn cmd_subset_search(opts: &RunOptions, exec: Execution) -> Result<Vec<PathBuf>, CliError> {
    let l = load_config(&opts.config_path, opts.seed)?;
    require_datasets(&l)?;
    let section = l.config.subset_search.clone().ok_or_else(|| CliError::Config("config has no [subset_search] section".into()))?;
    let base = analogy_base(&l, section.predictor.as_deref())?;
    let manifest = RunManifest::new("subset-search", &l.config_bytes, l.hashes.clone(), l.seed);
    let mut summary = Summary::new("Feature subset search", &manifest);
    let (mut residuals, mut metrics) = (residual_table(), metric_table());
    let mut trace = Table::new("subset_trace", &["dataset", "subset", "size", "objective_metric", "objective"]);
    let mut folds = Table::new("fold_subsets", &["dataset", "held_out", "subset"]);
    let nesting = match section.search.nesting {
        Nesting::PerFold => "per-fold",
        Nesting::Global => "global",
    };
    for ds in &l.datasets {
        let mut out = subset_search(ds, &base, &section.search, l.seed, exec)?;
        out.residuals.predictor_label = format!("subset-search ({nesting})");
        for t in &out.trace {
            trace.push(vec![ds.label().into(), t.subset.join("+").into(), t.subset.len().into(), section.search.objective.to_string().into(), t.objective.into()]);
        }
        for f in &out.per_fold {
            folds.push(vec![ds.label().into(), f.held_out.to_string().into(), f.subset.join("+").into()]);
        }
        let results = metric_results(&l, ds, &out.residuals, exec)?;
        push_residuals(&mut residuals, &out.residuals);
        push_metrics(&mut metrics, &out.residuals, &results);
        let note = format!(
            "selected on all cases: {{{}}} ({} = {})",
            out.selected.join(", "),
            section.search.objective,
            out.objective_value.map_or("n/a".to_string(), format_number)
        );
        summarize_run(&mut summary, &out.residuals, &results, Some(&note));
        if out.peeking_prone {
            summary.line("**peeking-prone**: the subset was chosen using every case, including each held-out case; the accuracy above is optimistic.");
        }
    }
    emit(opts, &manifest, &[residuals, metrics, trace, folds], summary, &[])
}

pub fn cmd_sensitivity(opts: &RunOptions, exec: Execution) -> Result<Vec<PathBuf>, CliError> {
    let l = load_config(&opts.config_path, opts.seed)?;
    require_datasets(&l)?;
    require_predictors(&l, 1)?;
    let section = l.config.sensitivity.clone().ok_or_else(|| CliError::Config("config has no [sensitivity] section".into()))?;
    let manifest = RunManifest::new("sensitivity", &l.config_bytes, l.hashes.clone(), l.seed);
    let mut summary = Summary::new("Training-set size sensitivity", &manifest);
    predictor_settings(&mut summary, &l.config.predictors);
    let metric_names: Vec<String> = l.config.metrics.iter().map(ToString::to_string).collect();
    let mut wide_headers = vec!["dataset", "predictor", "ordering", "size", "repeat", "test_n", "fallbacks"];
    wide_headers.extend(metric_names.iter().map(String::as_str));
    wide_headers.push("flag");
    let mut curve = Table::new("curve", &wide_headers);
    let mut long = Table::new("curve_long", &["dataset", "predictor", "size", "repeat", "metric", "value"]);
    let mut spread_t = Table::new("curve_spread", &["dataset", "predictor", "size", "metric", "min", "median", "max", "repeats"]);
    for ds in &l.datasets {
        for p in &l.config.predictors {
            let table = sensitivity_curve(ds, &p.spec, &section.sizes, section.repeats, &l.config.metrics, l.seed, exec)
                .map_err(|e| CliError::Data(format!("{} / {}: {e}", ds.label(), p.label)))?;
            let ordering = format!("{:?}", table.ordering).to_lowercase();
            for r in &table.rows {
                let mut row: Vec<Cell> = vec![
                    ds.label().into(),
                    p.label.clone().into(),
                    ordering.clone().into(),
                    r.size.into(),
                    r.repeat.into(),
                    r.test_n.into(),
                    r.fallbacks.into(),
                ];
                row.extend(r.values.iter().map(|v| Cell::from(*v)));
                row.push(r.flag.clone().into());
                curve.push(row);
                for (m, v) in metric_names.iter().zip(&r.values) {
                    long.push(vec![ds.label().into(), p.label.clone().into(), r.size.into(), r.repeat.into(), m.clone().into(), (*v).into()]);
                }
            }
            let mut rows = Vec::new();
            for s in &table.spread {
                spread_t.push(vec![
                    ds.label().into(),
                    p.label.clone().into(),
                    s.size.into(),
                    s.metric.to_string().into(),
                    s.min.into(),
                    s.median.into(),
                    s.max.into(),
                    s.repeats.into(),
                ]);
                rows.push(vec![s.size.to_string(), s.metric.to_string(), format_number(s.min), format_number(s.median), format_number(s.max)]);
            }
            summary.heading(&format!("{} / {}", ds.label(), p.label));
            let flagged = table.rows.iter().filter(|r| r.flag.is_some()).count();
            summary.line(&format!("case ordering: {ordering}, repeats: {}, flagged rows: {flagged}", section.repeats));
            summary.table(&["size", "metric", "min", "median", "max"], &rows);
        }
    }
    emit(opts, &manifest, &[curve, long, spread_t], summary, &[])
}

/// One-shot estimate, identical to the HTTP endpoint's payload.
pub fn cmd_estimate(
    config_path: &Path,
    dataset: Option<&str>,
    predictor: Option<&str>,
    k: Option<usize>,
    targets: &[String],
) -> Result<String, CliError> {
    let l = load_config(config_path, None)?;
    require_datasets(&l)?;
    let mut config = analogy_base(&l, predictor)?;
    if let Some(k) = k {
        config.k = k;
    }
    let dataset = dataset.map(String::from).unwrap_or_else(|| l.datasets[0].label().to_string());
    let mut target = BTreeMap::new();
    for t in targets {
        let (name, value) = t.split_once('=').ok_or_else(|| CliError::Usage(format!("--target expects NAME=VALUE, got '{t}'")))?;
        target.insert(name.trim().to_string(), serde_json::Value::String(value.trim().to_string()));
    }
    let state = cbr_service::AppState::new(l.datasets).map_err(|e| CliError::Config(e.to_string()))?;
    let request = cbr_service::EstimateRequest { dataset, target, config };
    let response = cbr_service::compute_estimate(&state, &request).map_err(|f| {
        if f.status.as_u16() == 422 {
            CliError::Data(f.message)
        } else {
            CliError::Usage(f.message)
        }
    })?;
    Ok(serde_json::to_string_pretty(&response).expect("response serializes") + "\n")
}

pub fn cmd_serve(config_path: &Path, address: Option<&str>) -> Result<(), CliError> {
    let l = load_config(config_path, None)?;
    let address = address.unwrap_or(&l.config.serve.address).to_string();
    let cors = l.config.serve.cors_origin.clone();
    let state = cbr_service::AppState::new(l.datasets).map_err(|e| CliError::Config(e.to_string()))?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(async move {
        let listener = cbr_service::bind(&address).await.map_err(|e| CliError::Config(e.to_string()))?;
        let local = listener.local_addr().map_err(|e| CliError::Internal(e.to_string()))?;
        println!("listening on http://{local}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        cbr_service::serve(listener, state, cors.as_deref(), shutdown).await.map_err(|e| CliError::Internal(e.to_string()))
    })?;
    eprintln!("shut down cleanly");
    Ok(())
}

/// Dataset diagnostics. Returns the report text and the number of issues.
pub fn cmd_validate(pairs: &[(PathBuf, PathBuf)]) -> (String, usize) {
    let mut out = String::new();
    let mut count = 0;
    for (csv, schema) in pairs {
        match Dataset::load(csv, schema) {
            Ok(ds) => out.push_str(&format!("{}: {} cases, {} predictors, 0 issues\n", csv.display(), ds.len(), ds.active_predictors().len())),
            Err(e) => {
                let issues = e.issues();
                if issues.is_empty() {
                    count += 1;
                    out.push_str(&format!("{}: {e}\n", csv.display()));
                } else {
                    count += issues.len();
                    for i in &issues {
                        out.push_str(&format!("{}: {i}\n", csv.display()));
                    }
                    out.push_str(&format!("{}: {} issue{}\n", csv.display(), issues.len(), if issues.len() == 1 { "" } else { "s" }));
                }
            }
        }
    }
    out.push_str(&format!("{count} issue{}\n", if count == 1 { "" } else { "s" }));
    (out, count)
}

pub fn validate_pairs_from_config(path: &Path) -> Result<Vec<(PathBuf, PathBuf)>, CliError> {
    let cfg = ExperimentConfig::load(path)?;
    Ok(cfg.datasets.iter().map(|d| (cfg.resolve_path(&d.csv), cfg.resolve_path(&d.schema))).collect())
}
