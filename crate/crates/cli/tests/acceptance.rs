//! Acceptance criteria P1–P10. One line per criterion; the process exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cbr_core::analogy::{AnalogyModel, Pooling, SimilarityConfig};
use cbr_core::dataset::{Dataset, FeatureKind, ProjectCase, Schema, Value};
use cbr_core::harness::{
    loocv, read_comparison_records, sensitivity_curve, subset_search, vote_map, vote_count, FoldArtifacts, Nesting,
    PredictorSpec, SearchMode, StepwiseSpec, SubsetSearchConfig,
};
use cbr_core::metrics::{self, bootstrap, BootstrapOptions, Metric, MetricError, ResidualEntry};
use cbr_core::regression::{ols_fit, stepwise_fit, Transform};
use cbr_core::{CaseId, Execution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(stem: &str) -> Dataset {
    Dataset::load(data(&format!("{stem}.csv")), data(&format!("{stem}.schema.toml"))).expect(stem)
}

fn analogy(k: usize) -> PredictorSpec {
    PredictorSpec::Analogy(SimilarityConfig { k, pooling: Pooling::Mean, ..Default::default() })
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(limit: Duration, start: Instant) -> Result<String, String> {
    let took = start.elapsed();
    if took < limit {
        Ok(format!("{:.2?} < {:.0?}", took, limit))
    } else {
        Err(format!("took {:.2?}, limit {:.0?}", took, limit))
    }
}

fn p1() -> Outcome {
    let start = Instant::now();
    let ds = load("duplicates20");
    let run = loocv(&ds, &analogy(1), 1, Execution::Parallel).map_err(|e| e.to_string())?;
    let e = &run.residuals.entries;
    if e.len() != 20 || e.iter().any(|r| r.predicted != r.actual) {
        return Err("non-zero residual".into());
    }
    let mmre = metrics::mmre(e).unwrap();
    let pred = metrics::pred(e, 25.0).unwrap();
    let sa = metrics::standardised_accuracy(e, &ds.efforts()).unwrap();
    if (mmre, pred, sa) != (0.0, 1.0, 100.0) {
        return Err(format!("mmre={mmre} pred={pred} sa={sa}"));
    }
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("20 zero residuals, MMRE 0, Pred(25) 1, SA 100; {t}"))
}

fn parse_fraction(s: &str) -> f64 {
    match s.split_once('/') {
        Some((n, d)) => n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap(),
        None => s.parse().unwrap(),
    }
}

fn p2() -> Outcome {
    let ds = load("toy4");
    let spec = analogy(2);
    let run = loocv(&ds, &spec, 1, Execution::Sequential).map_err(|e| e.to_string())?;
    let PredictorSpec::Analogy(cfg) = &spec else { unreachable!() };
    let mut reader = csv::Reader::from_path(data("toy4_loocv_trace.csv")).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let id = CaseId::new(&row[0]);
        let entry = run.residuals.entries.iter().find(|e| e.case_id == id).ok_or(format!("no residual for {id}"))?;
        let (actual, predicted, residual) = (parse_fraction(&row[1]), parse_fraction(&row[2]), parse_fraction(&row[3]));
        let got_residual = entry.actual - entry.predicted;
        for (what, want, got) in [("actual", actual, entry.actual), ("predicted", predicted, entry.predicted), ("residual", residual, got_residual)] {
            if (want - got).abs() > 1e-12 {
                return Err(format!("{id} {what}: want {want}, got {got}"));
            }
        }
        // Donor identities and distances from the fold's own model.
        let training: Vec<&ProjectCase> = ds.cases().iter().filter(|c| *c.id() != id).collect();
        let model = AnalogyModel::fit(ds.schema(), training, cfg).map_err(|e| e.to_string())?;
        let pred = model.predict(ds.case(&id).unwrap().values()).map_err(|e| e.to_string())?;
        for (d, cols) in pred.donors.iter().zip([(4, 5), (6, 7)]) {
            let want_sq = parse_fraction(&row[cols.1]);
            if d.case_id.as_str() != &row[cols.0] || (d.distance * d.distance - want_sq).abs() > 1e-12 {
                return Err(format!("{id}: donor {} at d²={} vs {} at {}", d.case_id, d.distance * d.distance, &row[cols.0], want_sq));
            }
        }
        checked += 1;
    }
    if checked != 4 {
        return Err(format!("trace has {checked} rows"));
    }
    Ok("4 residuals and 8 donor distances within 1e-12".into())
}

fn entries(pairs: &[(f64, f64)]) -> Vec<ResidualEntry> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(actual, predicted))| ResidualEntry { case_id: CaseId::new(format!("{}", i + 1)), actual, predicted, fallback: false })
        .collect()
}

fn p3() -> Outcome {
    let start = Instant::now();
    let sets: [[(f64, f64); 5]; 3] = [
        [(100.0, 150.0), (64.0, 72.0), (32.0, 24.0), (200.0, 250.0), (10.0, 10.0)],
        [(40.0, 30.0), (80.0, 100.0), (16.0, 18.0), (50.0, 50.0), (256.0, 128.0)],
        [(1.0, 1.5), (2.0, 3.0), (4.0, 1.0), (8.0, 10.0), (16.0, 12.0)],
    ];
    for (si, set) in sets.iter().enumerate() {
        let e = entries(set);
        let n = set.len() as f64;
        // Brute-force oracles straight from the definitions.
        let mres: Vec<f64> = set.iter().map(|(a, p)| ((a - p) / a).abs() * 100.0).collect();
        let mmre = mres.iter().sum::<f64>() / n;
        let mut sorted = mres.clone();
        sorted.sort_by(f64::total_cmp);
        let mdmre = sorted[2];
        let pred = set.iter().filter(|(a, p)| (a - p).abs() / a <= 0.25).count() as f64 / n;
        let abs: Vec<f64> = set.iter().map(|(a, p)| (a - p).abs()).collect();
        let mar = abs.iter().sum::<f64>() / n;
        let efforts: Vec<f64> = set.iter().map(|x| x.0).collect();
        let mut pair_total = 0.0;
        let mut pairs = 0.0;
        for i in 0..efforts.len() {
            for j in 0..efforts.len() {
                if i != j {
                    pair_total += (efforts[i] - efforts[j]).abs();
                    pairs += 1.0;
                }
            }
        }
        let mar_p0 = pair_total / pairs;
        let sa = (1.0 - mar / mar_p0) * 100.0;
        let got = [
            metrics::mmre(&e).unwrap(),
            metrics::mdmre(&e).unwrap(),
            metrics::pred(&e, 25.0).unwrap(),
            metrics::mar(&e).unwrap(),
            metrics::standardised_accuracy(&e, &efforts).unwrap(),
        ];
        for ((name, want), got) in ["mmre", "mdmre", "pred", "mar", "sa"].iter().zip([mmre, mdmre, pred, mar, sa]).zip(got) {
            if want != got {
                return Err(format!("set {si} {name}: oracle {want}, got {got}"));
            }
        }
    }
    // Cohen's d between the absolute residuals of two sets.
    let a = [20.0, 40.0, 10.0, 50.0, 30.0];
    let b = [12.0, 8.0, 10.0, 6.0, 14.0];
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let mut ss = 0.0;
    for x in a {
        ss += (x - ma) * (x - ma);
    }
    for x in b {
        ss += (x - mb) * (x - mb);
    }
    let d = (ma - mb) / (ss / 8.0).sqrt();
    let got = metrics::cohens_d(&a, &b).unwrap();
    if d != got {
        return Err(format!("cohen's d: oracle {d}, got {got}"));
    }
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("15 metric values and Cohen's d equal brute force; {t}"))
}

fn regression_schema(predictors: &[&str]) -> Schema {
    let mut toml = String::from("provenance = \"generated\"\n[[features]]\nname = \"id\"\nkind = \"categorical\"\nrole = \"case-id\"\n");
    for p in predictors {
        toml.push_str(&format!("[[features]]\nname = \"{p}\"\nkind = \"numeric\"\nrole = \"predictor\"\n"));
    }
    toml.push_str("[[features]]\nname = \"effort\"\nkind = \"numeric\"\nrole = \"target\"\n");
    Schema::from_toml_str(&toml).unwrap()
}

fn make_dataset(schema: Schema, rows: Vec<(Vec<f64>, f64)>) -> Dataset {
    let cases = rows
        .into_iter()
        .enumerate()
        .map(|(i, (xs, y))| {
            let mut values = vec![Value::Missing];
            values.extend(xs.into_iter().map(Value::Number));
            values.push(Value::Missing);
            ProjectCase::new(&schema, format!("{}", i + 1), y, values)
        })
        .collect();
    Dataset::new(schema, cases, "generated").unwrap()
}

fn p4() -> Outcome {
    let schema = regression_schema(&["x1", "x2", "x3", "x4"]);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows: Vec<(Vec<f64>, f64)> = (0..25)
        .map(|_| {
            let xs: Vec<f64> = (0..4).map(|_| rng.random_range(1.0..50.0)).collect();
            let y = 2.0 * xs[0] + 5.0;
            (xs, y)
        })
        .collect();
    let ds = make_dataset(schema, rows);
    let refs = ds.case_refs();
    let m = stepwise_fit(ds.schema(), &refs, &["x1", "x2", "x3", "x4"], 0.05, 0.10, Transform::None).map_err(|e| e.to_string())?;
    if m.selected != ["x1"] {
        return Err(format!("selected {:?}", m.selected));
    }
    if (m.coefficients[0] - 2.0).abs() > 1e-6 || (m.intercept - 5.0).abs() > 1e-6 {
        return Err(format!("y = {}x1 + {}", m.coefficients[0], m.intercept));
    }

    let schema = regression_schema(&["size"]);
    let rows: Vec<(Vec<f64>, f64)> = (1..=20).map(|i| {
        let size = 10.0 * i as f64 + 3.0;
        (vec![size], 3.0 * size.powf(0.9))
    }).collect();
    let ds = make_dataset(schema, rows);
    let refs = ds.case_refs();
    let m = ols_fit(ds.schema(), &refs, &["size"], Transform::LogLog).map_err(|e| e.to_string())?;
    let (a, b) = (m.intercept.exp(), m.coefficients[0]);
    if (a - 3.0).abs() > 1e-6 || (b - 0.9).abs() > 1e-6 {
        return Err(format!("effort = {a}·size^{b}"));
    }
    Ok(format!("stepwise selects {{x1}}: 2.0000000 x1 + 5.0000000; log-log {a:.7}·size^{b:.7}"))
}

fn random_dataset(seed: u64, n: usize) -> Dataset {
    let schema = regression_schema(&["f1", "f2", "f3", "f4"]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let xs: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..100.0)).collect();
            let y = 50.0 + 4.0 * xs[0] + 1.5 * xs[2] + rng.random_range(0.0..120.0);
            (xs, y)
        })
        .collect();
    make_dataset(schema, rows)
}

/// Leave-one-out MMRE of the analogy predictor restricted to `subset`,
/// computed with a plain loop.
fn brute_loocv_mmre(ds: &Dataset, subset: &[&str], k: usize) -> f64 {
    let cfg = SimilarityConfig { k, feature_subset: Some(subset.iter().map(|s| s.to_string()).collect()), ..Default::default() };
    let mut total = 0.0;
    for (i, target) in ds.cases().iter().enumerate() {
        let training: Vec<&ProjectCase> = ds.cases().iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c).collect();
        let est = AnalogyModel::fit(ds.schema(), training, &cfg).unwrap().predict(target.values()).unwrap().estimate;
        total += (target.effort() - est).abs() / target.effort();
    }
    100.0 * total / ds.len() as f64
}

fn p5() -> Outcome {
    let names = ["f1", "f2", "f3", "f4"];
    let base = SimilarityConfig { k: 2, ..Default::default() };
    let ds = random_dataset(500, 18);
    let exhaustive = SubsetSearchConfig { mode: SearchMode::Exhaustive, nesting: Nesting::Global, objective: Metric::Mmre };
    let out = subset_search(&ds, &base, &exhaustive, 0, Execution::Parallel).map_err(|e| e.to_string())?;
    let mut best: Option<(f64, Vec<&str>)> = None;
    let mut enumerated = 0;
    for mask in 1u32..16 {
        let subset: Vec<&str> = (0..4).filter(|b| mask & (1 << b) != 0).map(|b| names[b]).collect();
        let v = brute_loocv_mmre(&ds, &subset, 2);
        enumerated += 1;
        let traced = out.trace.iter().find(|t| t.subset == subset).and_then(|t| t.objective).ok_or("subset missing from trace")?;
        if (traced - v).abs() > 1e-9 * v.max(1.0) {
            return Err(format!("{subset:?}: search {traced}, brute force {v}"));
        }
        let better = match &best {
            None => true,
            Some((bv, bs)) => v < *bv - 1e-12 * bv.max(1.0) || ((v - bv).abs() <= 1e-12 * bv.max(1.0) && subset.len() < bs.len()),
        };
        if better {
            best = Some((v, subset));
        }
    }
    let (bv, bs) = best.unwrap();
    if out.selected != bs || out.trace.len() != 15 || enumerated != 15 {
        return Err(format!("search chose {:?}, brute force {:?}", out.selected, bs));
    }
    let forward = SubsetSearchConfig { mode: SearchMode::Forward, ..exhaustive.clone() };
    for seed in 0..20 {
        let ds = random_dataset(1000 + seed, 16);
        let ex = subset_search(&ds, &base, &exhaustive, seed, Execution::Parallel).map_err(|e| e.to_string())?;
        let fw = subset_search(&ds, &base, &forward, seed, Execution::Parallel).map_err(|e| e.to_string())?;
        let (e, f) = (ex.objective_value.unwrap(), fw.objective_value.unwrap());
        if e > f {
            return Err(format!("seed {seed}: exhaustive {e} > forward {f}"));
        }
    }
    Ok(format!("exhaustive = brute force over 15 subsets (best {bs:?}, MMRE {bv:.3}); exhaustive ≤ forward on 20 seeds"))
}

fn p6() -> Outcome {
    let start = Instant::now();
    let ds = load("synthetic40");
    let sizes: Vec<usize> = (3..=25).collect();
    let table = sensitivity_curve(&ds, &analogy(3), &sizes, 3, &[Metric::Mmre], 2024, Execution::Parallel).map_err(|e| e.to_string())?;
    let m = |s: usize| table.median_at(s, Metric::Mmre).unwrap();
    let (m3, m10, m20) = (m(3), m(10), m(20));
    if m20 > m3 {
        return Err(format!("median MMRE at 20 ({m20:.2}) exceeds size 3 ({m3:.2})"));
    }
    let early_rate = (m3 - m10).abs() / 7.0;
    let mut late: Vec<f64> = (10..25).map(|s| (m(s + 1) - m(s)).abs()).collect();
    late.sort_by(f64::total_cmp);
    let late_rate = (late[late.len() / 2 - 1] + late[late.len() / 2]) / 2.0;
    let late_rate = if late.len() % 2 == 1 { late[late.len() / 2] } else { late_rate };
    if late_rate >= 0.2 * early_rate {
        return Err(format!("median per-project change beyond 10 is {late_rate:.3} vs size 3→10 rate {early_rate:.3}"));
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("median MMRE 3/10/20 = {m3:.1}/{m10:.1}/{m20:.1}; per-project change {late_rate:.3} < 0.2 × {early_rate:.3}; {t}"))
}

fn p7() -> Outcome {
    let start = Instant::now();
    let mut got = Vec::new();
    for (file, group) in [("review_mair.csv", "Mair"), ("review_idri.csv", "Idri")] {
        let text = std::fs::read_to_string(data(file)).map_err(|e| e.to_string())?;
        let records = read_comparison_records(&text, 0.0).map_err(|e| e.to_string())?;
        let votes = vote_map(&vote_count(&records, 0.0).map_err(|e| e.to_string())?);
        got.push(*votes.get(group).ok_or(format!("no group {group}"))?);
    }
    if got != [(9, 7, 4), (36, 4, 0)] {
        return Err(format!("got {got:?}"));
    }
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("Mair (9, 7, 4), Idri (36, 4, 0); {t}"))
}

fn p8() -> Outcome {
    let start = Instant::now();
    let (reps, n, mu) = (500u64, 30, 10.0);
    let normal = Normal::new(mu, 3.0).unwrap();
    let mean = |s: &[f64]| -> Result<f64, MetricError> { Ok(s.iter().sum::<f64>() / s.len() as f64) };
    let mut covered = 0;
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(80_000 + rep);
        let sample: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let iv = bootstrap(&sample, mean, BootstrapOptions { b: 1000, level: 0.95, seed: rep }, Execution::Parallel).map_err(|e| e.to_string())?;
        if iv.low <= mu && mu <= iv.high {
            covered += 1;
        }
    }
    let rate = covered as f64 / reps as f64;
    if !(0.90..=0.98).contains(&rate) {
        return Err(format!("coverage {rate:.3}"));
    }
    let t = within(Duration::from_secs(120), start)?;
    Ok(format!("coverage {rate:.3} over {reps} repetitions, b = 1000; {t}"))
}

const EXPERIMENTS: [(&str, &str); 4] = [
    ("loocv", "toy4_loocv.toml"),
    ("compare", "compare.toml"),
    ("subset-search", "synthetic40_subset.toml"),
    ("sensitivity", "synthetic40_sensitivity.toml"),
];

fn run_cbr(command: &str, config: &str, out: &Path, threads: usize, epoch: Option<&str>) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cbr"));
    cmd.arg(command).arg("--config").arg(data(config)).arg("--out").arg(out).arg("--threads").arg(threads.to_string());
    cmd.env_remove("CBR_OUT_DIR");
    match epoch {
        Some(e) => cmd.env("SOURCE_DATE_EPOCH", e),
        None => cmd.env_remove("SOURCE_DATE_EPOCH"),
    };
    let status = cmd.output().map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("cbr {command} failed: {}", String::from_utf8_lossy(&status.stderr)));
    }
    Ok(())
}

/// File name to contents, for every file in `dir`.
fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        files.push((entry.file_name().to_string_lossy().into_owned(), std::fs::read(entry.path()).map_err(|e| e.to_string())?));
    }
    files.sort();
    Ok(files)
}

fn diff(a: &[(String, Vec<u8>)], b: &[(String, Vec<u8>)], skip: &[&str]) -> Option<String> {
    let keep = |v: &[(String, Vec<u8>)]| v.iter().filter(|(n, _)| !skip.contains(&n.as_str())).cloned().collect::<Vec<_>>();
    let (a, b) = (keep(a), keep(b));
    if a.iter().map(|f| &f.0).ne(b.iter().map(|f| &f.0)) {
        return Some("different file sets".into());
    }
    a.iter().zip(&b).find(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.clone())
}

fn p9() -> Outcome {
    let start = Instant::now();
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (command, config) in EXPERIMENTS {
        let dir = |tag: &str| root.path().join(format!("{command}-{tag}"));
        run_cbr(command, config, &dir("a"), 4, Some("1700000000"))?;
        run_cbr(command, config, &dir("b"), 4, Some("1700000000"))?;
        run_cbr(command, config, &dir("t1"), 1, Some("1700000000"))?;
        run_cbr(command, config, &dir("clock"), 2, None)?;
        let base = snapshot(&dir("a"))?;
        if base.len() < 3 {
            return Err(format!("{command}: only {} files written", base.len()));
        }
        for (tag, skip) in [("b", &[][..]), ("t1", &[][..]), ("clock", &["summary.md", "manifest.json"][..])] {
            if let Some(f) = diff(&base, &snapshot(&dir(tag))?, skip) {
                return Err(format!("{command}: {f} differs between run a and run {tag}"));
            }
            compared += 1;
        }
    }
    let t = within(Duration::from_secs(120), start)?;
    Ok(format!("{compared} reruns of loocv, compare, subset-search and sensitivity byte-identical (threads 4/1/2); {t}"))
}

fn fold_artifacts(ds: &Dataset, spec: &PredictorSpec) -> Result<Vec<(CaseId, Option<FoldArtifacts>)>, String> {
    let run = loocv(ds, spec, 1, Execution::Parallel).map_err(|e| e.to_string())?;
    Ok(run.folds.into_iter().map(|f| (f.held_out, f.artifacts)).collect())
}

fn mutate(ds: &Dataset, id: &CaseId) -> Dataset {
    let schema = ds.schema().clone();
    let cases = ds
        .cases()
        .iter()
        .map(|c| {
            let values: Vec<Value> = c
                .values()
                .iter()
                .zip(&schema.features)
                .map(|(v, f)| match v {
                    _ if c.id() != id => v.clone(),
                    Value::Number(x) if f.kind == FeatureKind::Boolean => Value::Number(1.0 - x),
                    Value::Number(x) => Value::Number(x * 7.0 + 1000.0),
                    Value::Category(_) => Value::Category("mutated".into()),
                    Value::Missing => Value::Missing,
                })
                .collect();
            ProjectCase::new(&schema, c.id().clone(), c.effort(), values)
        })
        .collect();
    Dataset::new(schema, cases, ds.label()).unwrap()
}

fn p10() -> Outcome {
    let mut audited = 0;
    for stem in ["toy4", "duplicates20", "synthetic40"] {
        let ds = load(stem);
        let specs = [analogy(2), PredictorSpec::Stepwise(StepwiseSpec::default())];
        for case in ds.cases() {
            let id = case.id();
            let changed = mutate(&ds, id);
            for spec in &specs {
                let (before, after) = (fold_artifacts(&ds, spec)?, fold_artifacts(&changed, spec)?);
                let own = |v: &[(CaseId, Option<FoldArtifacts>)]| v.iter().find(|f| f.0 == *id).cloned();
                if own(&before) != own(&after) {
                    return Err(format!("{stem}/{id}: {} fold artifacts changed", spec.describe()));
                }
                // Control: the mutation must be visible to folds that train on the case.
                if before == after {
                    return Err(format!("{stem}/{id}: mutation invisible to every fold, audit is vacuous"));
                }
                audited += 1;
            }
        }
        if stem != "toy4" {
            let search = SubsetSearchConfig { mode: SearchMode::Exhaustive, nesting: Nesting::PerFold, objective: Metric::Mmre };
            let base = SimilarityConfig { k: 2, ..Default::default() };
            let before = subset_search(&ds, &base, &search, 0, Execution::Parallel).map_err(|e| e.to_string())?;
            for case in ds.cases().iter().step_by(5) {
                let after = subset_search(&mutate(&ds, case.id()), &base, &search, 0, Execution::Parallel).map_err(|e| e.to_string())?;
                let pick = |o: &cbr_core::harness::SubsetSearchOutcome| o.per_fold.iter().find(|f| f.held_out == *case.id()).map(|f| f.subset.clone());
                if pick(&before) != pick(&after) {
                    return Err(format!("{stem}/{}: per-fold subset changed", case.id()));
                }
                audited += 1;
            }
        }
    }
    Ok(format!("{audited} held-out mutations left ranges, coefficients and per-fold subsets unchanged"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("P1 identity retrieval", p1),
        ("P2 hand-trace equivalence", p2),
        ("P3 metric oracles", p3),
        ("P4 planted regression recovery", p4),
        ("P5 subset-search oracle", p5),
        ("P6 sensitivity trend", p6),
        ("P7 vote-count reproduction", p7),
        ("P8 bootstrap coverage", p8),
        ("P9 CLI determinism", p9),
        ("P10 no-peeking audit", p10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
