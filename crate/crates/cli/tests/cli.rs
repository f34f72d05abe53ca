use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use cbr_core::analogy::SimilarityConfig;
use cbr_core::config::ExperimentConfig;
use cbr_core::harness::{loocv, sensitivity_curve};
use cbr_core::metrics::{bootstrap_ci, random_guess_mar, BootstrapOptions};
use cbr_core::{Dataset, Execution, Metric};
use cbr_service::{compute_estimate, AppState, EstimateRequest};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn load(stem: &str) -> Dataset {
    Dataset::load(data(&format!("{stem}.csv")), data(&format!("{stem}.schema.toml"))).unwrap()
}

fn cbr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbr")).args(args).env_remove("CBR_OUT_DIR").output().unwrap()
}

fn experiment(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    cbr(&args)
}

fn records(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn bits(s: &str) -> u64 {
    s.parse::<f64>().unwrap().to_bits()
}

#[test]
fn loocv_metrics_equal_in_process_results() {
    let out = tempfile::tempdir().unwrap();
    let run = experiment("loocv", &data("toy4_loocv.toml"), &out.path().join("r"), &[]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let cfg = ExperimentConfig::load(&data("toy4_loocv.toml")).unwrap();
    let ds = load("toy4");
    let base = random_guess_mar(&ds.efforts()).unwrap();
    let opts = BootstrapOptions { b: cfg.bootstrap.b, level: cfg.bootstrap.level, seed: cfg.seed };
    let rows = records(&out.path().join("r/metrics.csv"));
    assert_eq!(rows.len(), cfg.predictors.len() * cfg.metrics.len());
    for p in &cfg.predictors {
        let mut set = loocv(&ds, &p.spec, cfg.seed, Execution::Sequential).unwrap().residuals;
        set.predictor_label = p.label.clone();
        for &m in &cfg.metrics {
            let want = bootstrap_ci(&set, m, Some(base), opts, Execution::Sequential).unwrap();
            let row = rows.iter().find(|r| r[1] == *p.label && r[2] == *m.to_string()).unwrap();
            assert_eq!(bits(&row[3]), want.value.to_bits(), "{} {m}", p.label);
            assert_eq!((bits(&row[4]), bits(&row[5])), (want.ci_low.to_bits(), want.ci_high.to_bits()), "{} {m}", p.label);
        }
    }
    let summary = std::fs::read_to_string(out.path().join("r/summary.md")).unwrap();
    assert!(summary.contains("config_sha256") && summary.contains("95% CI low"));
}

#[test]
fn missing_dataset_fails_without_touching_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "version = 1\nseed = 1\n[[datasets]]\ncsv = \"nope.csv\"\nschema = \"nope.toml\"\n[[predictors]]\nlabel = \"m\"\nkind = \"mean-baseline\"\n").unwrap();
    let out = dir.path().join("out");
    let run = experiment("loocv", &cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("nope.csv"));
    assert!(!out.exists());
    let names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["bad.toml"]);
}

#[test]
fn config_and_usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v2.toml");
    std::fs::write(&cfg, "version = 2\nseed = 1\n").unwrap();
    assert_eq!(experiment("loocv", &cfg, &dir.path().join("o"), &[]).status.code(), Some(1));
    assert_eq!(cbr(&["loocv"]).status.code(), Some(1));
    assert_eq!(cbr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cbr(&["--help"]).status.code(), Some(0));
    assert_eq!(cbr(&["validate", "only.csv"]).status.code(), Some(1));
    // A subset-search run needs its section.
    assert_eq!(experiment("subset-search", &data("toy4_loocv.toml"), &dir.path().join("o"), &[]).status.code(), Some(1));
}

#[test]
fn validate_reports_rules_and_ids() {
    let ok = cbr(&["validate", data("toy4.csv").to_str().unwrap(), "--schema", data("toy4.schema.toml").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("0 issues"));

    let dir = tempfile::tempdir().unwrap();
    let dup = dir.path().join("dup.csv");
    std::fs::write(&dup, "id,size,duration,sector,loc,effort\nA,10,2,telecom,1,100\nA,20,6,banking,2,220\nC,40,4,telecom,5,390\n").unwrap();
    let run = cbr(&["validate", dup.to_str().unwrap(), "--schema", data("toy4.schema.toml").to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.contains("'A'") && text.contains("unique-case-id"), "{text}");

    let schema = dir.path().join("no-target.toml");
    std::fs::write(&schema, std::fs::read_to_string(data("toy4.schema.toml")).unwrap().replace("role = \"target\"", "role = \"inactive\"")).unwrap();
    let run = cbr(&["validate", data("toy4.csv").to_str().unwrap(), "--schema", schema.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stdout).contains("single-target"));

    let all = cbr(&["validate", "--config", data("compare.toml").to_str().unwrap()]);
    assert_eq!(all.status.code(), Some(0));
}

#[test]
fn compare_writes_votes_effects_and_verdicts() {
    let out = tempfile::tempdir().unwrap();
    let run = experiment("compare", &data("compare.toml"), &out.path().join("c"), &[]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let votes = records(&out.path().join("c/votes.csv"));
    let vote = |group: &str| {
        let r = votes.iter().find(|r| &r[1] == group).unwrap();
        (r[2].to_string(), r[3].to_string(), r[4].to_string())
    };
    assert_eq!(vote("Mair"), ("9".into(), "7".into(), "4".into()));
    assert_eq!(vote("Idri"), ("36".into(), "4".into(), "0".into()));

    let comparisons = records(&out.path().join("c/comparisons.csv"));
    let row = comparisons.iter().find(|r| &r[0] == "duplicates20" && &r[1] == "analogy-k1" && &r[2] == "mean" && &r[3] == "mmre").unwrap();
    assert_eq!(&row[6], "a-better");
    assert!(row[7].parse::<f64>().unwrap() < 0.0);
}

#[test]
fn predictor_against_itself_is_inconclusive_with_zero_effect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("self.toml");
    let text = format!(
        "version = 1\nseed = 5\n[[datasets]]\ncsv = {:?}\nschema = {:?}\n\
         [[predictors]]\nlabel = \"a\"\nkind = \"analogy\"\nk = 2\n\
         [[predictors]]\nlabel = \"b\"\nkind = \"analogy\"\nk = 2\n",
        data("synthetic40.csv"),
        data("synthetic40.schema.toml")
    );
    std::fs::write(&cfg, text).unwrap();
    let run = experiment("compare", &cfg, &dir.path().join("o"), &[]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = records(&dir.path().join("o/comparisons.csv"));
    assert!(!rows.is_empty());
    for r in rows {
        assert_eq!((&r[6], &r[7], &r[8], &r[9]), ("inconclusive", "0", "0", "0"));
    }
}

#[test]
fn sensitivity_files_match_the_in_process_curve() {
    let out = tempfile::tempdir().unwrap();
    let run = experiment("sensitivity", &data("synthetic40_sensitivity.toml"), &out.path().join("s"), &["--threads", "2"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let cfg = ExperimentConfig::load(&data("synthetic40_sensitivity.toml")).unwrap();
    let section = cfg.sensitivity.clone().unwrap();
    let table = sensitivity_curve(&load("synthetic40"), &cfg.predictors[0].spec, &section.sizes, section.repeats, &cfg.metrics, cfg.seed, Execution::Sequential).unwrap();
    let long = records(&out.path().join("s/curve_long.csv"));
    assert_eq!(long.len(), table.rows.len() * cfg.metrics.len());
    let mut i = 0;
    for row in &table.rows {
        for (m, v) in cfg.metrics.iter().zip(&row.values) {
            let r = &long[i];
            assert_eq!((&r[2], &r[3], &r[4]), (row.size.to_string().as_str(), row.repeat.to_string().as_str(), m.to_string().as_str()));
            assert_eq!(r[5].parse::<f64>().ok().map(f64::to_bits), v.map(f64::to_bits));
            i += 1;
        }
    }
    let spread = records(&out.path().join("s/curve_spread.csv"));
    let mmre_at_10 = spread.iter().find(|r| &r[2] == "10" && &r[3] == "mmre").unwrap();
    assert_eq!(bits(&mmre_at_10[5]), table.median_at(10, Metric::Mmre).unwrap().to_bits());
}

#[test]
fn json_lines_format_and_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env-out");
    let run = Command::new(env!("CARGO_BIN_EXE_cbr"))
        .args(["loocv", "--config", data("toy4_loocv.toml").to_str().unwrap(), "--format", "json-lines"])
        .env("CBR_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(run.status.success());
    let text = std::fs::read_to_string(out.join("metrics.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["dataset"], "toy4");
    assert!(first["value"].is_number());
    assert!(!out.join("metrics.csv").exists());
}

#[test]
fn estimate_prints_the_api_payload() {
    let run = cbr(&[
        "estimate",
        "--config",
        data("toy4_loocv.toml").to_str().unwrap(),
        "--k",
        "2",
        "--target",
        "size=25",
        "--target",
        "duration=5.5",
        "--target",
        "sector=telecom",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let printed: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();

    let state = AppState::new(vec![load("toy4")]).unwrap();
    let target = [("size", "25"), ("duration", "5.5"), ("sector", "telecom")]
        .into_iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.into())))
        .collect();
    let config = SimilarityConfig { k: 2, ..Default::default() };
    let want = compute_estimate(&state, &EstimateRequest { dataset: "toy4".into(), target, config }).unwrap();
    assert_eq!(printed, serde_json::to_value(want).unwrap());

    let bad = cbr(&["estimate", "--config", data("toy4_loocv.toml").to_str().unwrap(), "--target", "colour=red"]);
    assert_eq!(bad.status.code(), Some(1));
    let none = cbr(&["estimate", "--config", data("toy4_loocv.toml").to_str().unwrap()]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn serve_answers_and_shuts_down_on_interrupt() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cbr"))
        .args(["serve", "--config", data("serve.toml").to_str().unwrap(), "--address", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap_or_else(|| panic!("unexpected: {line}")).to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /api/v1/health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"status\":\"ok\"") && response.contains("synthetic40"), "{response}");

    let killed = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(killed.success());
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(0));
    let mut err = String::new();
    child.stderr.take().unwrap().read_to_string(&mut err).unwrap();
    assert!(err.contains("shut down cleanly"), "{err}");
}

#[test]
fn serve_without_datasets_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "version = 1\nseed = 1\n").unwrap();
    let run = cbr(&["serve", "--config", cfg.to_str().unwrap(), "--address", "127.0.0.1:0"]);
    assert_eq!(run.status.code(), Some(1));
}
