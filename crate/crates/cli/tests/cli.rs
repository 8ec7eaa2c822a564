use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use absdetect_core::corpus::DatasetFormat;
use absdetect_core::synthetic::{synthetic_corpus, SyntheticSpec};
use tempfile::TempDir;

fn absdetect(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_absdetect"))
        .args(args)
        .current_dir(dir)
        .env_remove("ABSDETECT_API_KEY")
        .env_remove("ABSDETECT_ENDPOINT_URL")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synthetic_dataset(dir: &Path, n_pairs: usize) -> PathBuf {
    let ds = synthetic_corpus(&SyntheticSpec {
        n_pairs,
        ..SyntheticSpec::default()
    });
    let path = dir.join("synthetic.jsonl");
    ds.save(&path, DatasetFormat::Jsonl).unwrap();
    path
}

fn write_humans(dir: &Path) -> PathBuf {
    let path = dir.join("humans.jsonl");
    let rows = [
        ("h1", "Spike protein binding in patients", "We measured spike protein binding in a cohort."),
        ("h2", "Vaccine uptake among health workers", "Vaccine uptake was surveyed in three hospitals."),
        ("h3", "Mortality trends after lockdown", "Mortality trends were analysed with registry data."),
    ];
    let text: String = rows
        .iter()
        .map(|(id, t, a)| format!("{}\n", serde_json::json!({"id": id, "title": t, "abstract": a})))
        .collect();
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn help_exits_zero() {
    let dir = TempDir::new().unwrap();
    let o = absdetect(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("experiment"));
    let o = absdetect(dir.path(), &["experiment", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn mock_generation_pairs_and_cache() {
    let dir = TempDir::new().unwrap();
    write_humans(dir.path());
    let o = absdetect(dir.path(), &["generate", "--mock", "--titles", "humans.jsonl", "--out", "pairs.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap();
    assert_eq!(first.lines().count(), 6);
    let provenance = fs::read_to_string(dir.path().join("pairs.jsonl.provenance.jsonl")).unwrap();
    assert_eq!(provenance.lines().count(), 3);

    let o = absdetect(dir.path(), &["generate", "--mock", "--titles", "humans.jsonl", "--out", "pairs.jsonl"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("3 from cache"), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap(), first);
}

#[test]
fn generation_without_credentials_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    write_humans(dir.path());
    let o = absdetect(dir.path(), &["generate", "--titles", "humans.jsonl", "--out", "x.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    let o = absdetect(
        dir.path(),
        &["generate", "--titles", "humans.jsonl", "--out", "x.jsonl", "--url", "http://127.0.0.1:9"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ABSDETECT_API_KEY"));
    assert!(!dir.path().join("x.jsonl").exists());
}

#[test]
fn clean_writes_one_document_per_record() {
    let dir = TempDir::new().unwrap();
    synthetic_dataset(dir.path(), 20);
    let o = absdetect(dir.path(), &["clean", "--dataset", "synthetic.jsonl", "--out", "clean.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("clean.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 40);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(first["tokens"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn experiment_report_is_reproducible() {
    let dir = TempDir::new().unwrap();
    synthetic_dataset(dir.path(), 60);
    let args = [
        "--seed", "7", "experiment", "--dataset", "synthetic.jsonl", "--features", "tfidf", "--model", "logreg",
        "--iterations", "2", "--name", "run",
    ];
    let o = absdetect(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("mean"));
    let report_path = dir.path().join("reports/run.json");
    let first = fs::read_to_string(&report_path).unwrap();
    let json: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(json["iterations"].as_array().unwrap().len(), 2);
    assert_eq!(json["config"]["base_seed"], 7);

    let o = absdetect(dir.path(), &args);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&report_path).unwrap(), first);
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = TempDir::new().unwrap();
    synthetic_dataset(dir.path(), 40);
    fs::write(
        dir.path().join("exp.json"),
        r#"{"name": "from-file", "dataset": "synthetic.jsonl", "iterations": 5,
            "features": {"family": "tfidf", "min_df": 0.0, "max_df": 1.0},
            "model": {"family": "mnb", "alpha": 0.5}}"#,
    )
    .unwrap();
    let o = absdetect(dir.path(), &["experiment", "--config", "exp.json", "--iterations", "1", "--model", "svm"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("reports/from-file.json")).unwrap()).unwrap();
    assert_eq!(json["iterations"].as_array().unwrap().len(), 1);
    assert_eq!(json["config"]["model"]["family"], "svm");
    assert_eq!(json["config"]["features"]["max_df"], 1.0);
}

#[test]
fn invalid_combination_names_the_valid_ones() {
    let dir = TempDir::new().unwrap();
    synthetic_dataset(dir.path(), 10);
    let o = absdetect(
        dir.path(),
        &["experiment", "--dataset", "synthetic.jsonl", "--features", "embedding-mean", "--model", "mnb"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("valid combinations"), "{}", stderr(&o));
    assert!(!dir.path().join("reports").exists());
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = absdetect(dir.path(), &["experiment", "--dataset", "nope.jsonl", "--features", "tfidf", "--model", "svm"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.jsonl"));
}

#[test]
fn analyze_bundle_and_predictions() {
    let dir = TempDir::new().unwrap();
    synthetic_dataset(dir.path(), 80);
    let o = absdetect(
        dir.path(),
        &[
            "experiment", "--dataset", "synthetic.jsonl", "--features", "tfidf", "--model", "svm", "--iterations",
            "1", "--save-bundle", "bundle",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = absdetect(dir.path(), &["analyze", "--dataset", "synthetic.jsonl", "--bundle", "bundle", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["analysis.json", "analysis.txt", "frequencies.csv"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
    let from_bundle = fs::read_to_string(dir.path().join("a/analysis.json")).unwrap();

    let o = absdetect(
        dir.path(),
        &["analyze", "--dataset", "synthetic.jsonl", "--predictions", "bundle/predictions.json", "--out", "b"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("b/analysis.json")).unwrap(), from_bundle);
}

#[test]
fn analyze_perfect_model_reports_no_errors() {
    let dir = TempDir::new().unwrap();
    let text: String = (0..30)
        .flat_map(|i| {
            let title = format!("title {i}");
            [
                serde_json::json!({"id": format!("p{i}"), "title": title, "abstract": "cohort registry mortality hospital", "label": "human"}),
                serde_json::json!({"id": format!("p{i}-ai"), "title": title, "abstract": "novel framework comprehensive insights", "label": "ai"}),
            ]
        })
        .map(|v| format!("{v}\n"))
        .collect();
    fs::write(dir.path().join("toy.jsonl"), text).unwrap();
    let o = absdetect(
        dir.path(),
        &["experiment", "--dataset", "toy.jsonl", "--features", "tfidf", "--model", "mnb", "--iterations", "1", "--save-bundle", "bundle"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = absdetect(dir.path(), &["analyze", "--dataset", "toy.jsonl", "--bundle", "bundle"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("no errors to analyze"));

    fs::write(dir.path().join("bundle/model.bin"), b"not a model").unwrap();
    let o = absdetect(dir.path(), &["analyze", "--dataset", "toy.jsonl", "--bundle", "bundle"]);
    assert_eq!(o.status.code(), Some(2));
    fs::remove_file(dir.path().join("bundle/model.bin")).unwrap();
    let o = absdetect(dir.path(), &["analyze", "--dataset", "toy.jsonl", "--bundle", "bundle"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn leaderboard_orders_and_checks_schema() {
    let dir = TempDir::new().unwrap();
    synthetic_dataset(dir.path(), 40);
    for (model, name) in [("svm", "svm-run"), ("mnb", "mnb-run")] {
        let o = absdetect(
            dir.path(),
            &["experiment", "--dataset", "synthetic.jsonl", "--features", "tfidf", "--model", model, "--iterations", "1", "--name", name],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = absdetect(dir.path(), &["leaderboard", "reports/svm-run.json"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);

    let o = absdetect(dir.path(), &["leaderboard", "reports", "--json", "--out", "board.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let board: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("board.json")).unwrap()).unwrap();
    let rows = board["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["accuracy"].as_f64() <= rows[1]["accuracy"].as_f64());

    let old = fs::read_to_string(dir.path().join("reports/mnb-run.json"))
        .unwrap()
        .replacen("\"schema_version\": 1", "\"schema_version\": 0", 1);
    fs::write(dir.path().join("reports/mnb-run.json"), old).unwrap();
    let o = absdetect(dir.path(), &["leaderboard", "reports"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("mnb-run.json"), "{}", stderr(&o));

    let empty = TempDir::new().unwrap();
    let o = absdetect(empty.path(), &["leaderboard", "."]);
    assert_eq!(o.status.code(), Some(1));
}
