//! The `triplex` binary: exit codes, outputs and goldens.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn triplex(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triplex"))
        .args(args)
        .arg("--config")
        .arg(repo().join("triplex.json"))
        .arg("--backend")
        .arg("mock")
        .arg("--out")
        .arg(out)
        .env_remove("TRIPLEX_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Compares against `tests/golden/<name>`, rewriting it when `UPDATE_GOLDEN` is set.
fn check_golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1 to create it", path.display()));
    assert!(expected == actual, "{name} differs from its golden file");
}

#[test]
fn unknown_variant_exits_2_listing_names() {
    let out = tempfile::tempdir().unwrap();
    let o = triplex(&["extract", "--variant", "two-shot"], out.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in ["zero-shot", "one-shot", "few-shot", "negative-examples", "all"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn missing_corpus_dir_exits_2_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(&config, r#"{"corpus": {"source_dir": "no-such-corpus"}, "backend": "mock"}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_triplex"))
        .args(["ingest", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no-such-corpus"), "{}", stderr(&o));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(&config, r#"{"corpus": {"source_dir": "."}, "colour": "blue"}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_triplex")).args(["ingest", "--config"]).arg(&config).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn eval_without_runs_exits_2() {
    let out = tempfile::tempdir().unwrap();
    let o = triplex(&["eval"], out.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no runs found"), "{}", stderr(&o));
}

#[test]
fn ingest_writes_four_documents() {
    let out = tempfile::tempdir().unwrap();
    let o = triplex(&["ingest"], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = fs::read_to_string(out.path().join("corpus.jsonl")).unwrap();
    assert_eq!(first.lines().count(), 4);
    triplex(&["ingest"], out.path());
    assert_eq!(fs::read_to_string(out.path().join("corpus.jsonl")).unwrap(), first);
}

#[test]
fn extract_all_writes_every_variant() {
    let out = tempfile::tempdir().unwrap();
    let o = triplex(&["extract", "--variant", "all"], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for v in ["zero-shot", "one-shot", "few-shot", "negative-examples"] {
        let runs = out.path().join("runs");
        let triples = fs::read_to_string(runs.join(format!("{v}.jsonl"))).unwrap();
        assert!(triples.lines().count() > 0, "{v}");
        assert!(runs.join(format!("{v}.stats.json")).is_file());
        assert!(runs.join(format!("{v}.rejections.jsonl")).is_file());
    }
    let o = triplex(&["extract", "--variant", "one-shot"], out.path());
    assert_eq!(o.status.code(), Some(0));
}

/// The repository config with absolute paths and a sample size of 10.
fn small_sample_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(repo().join("triplex.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let abs = |p: &serde_json::Value| serde_json::Value::from(repo().join(p.as_str().unwrap()).to_str().unwrap());
    for (section, key) in [
        ("corpus", "source_dir"),
        ("corpus", "stopwords_file"),
        ("corpus", "filler_terms_file"),
        ("prompts", "template_dir"),
        ("prompts", "examples_file"),
        ("extraction", "generic_terms_file"),
        ("eval", "gold_path"),
    ] {
        v[section][key] = abs(&v[section][key]);
    }
    v["eval"]["sample_size"] = 10.into();
    let path = dir.join("small.json");
    fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn sample_is_deterministic_and_seeded() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let config = small_sample_config(cfg_dir.path());
    let out = tempfile::tempdir().unwrap();
    let triplex = |args: &[&str], out: &Path| {
        Command::new(env!("CARGO_BIN_EXE_triplex"))
            .args(args)
            .arg("--config")
            .arg(&config)
            .args(["--backend", "mock", "--out"])
            .arg(out)
            .output()
            .unwrap()
    };
    assert_eq!(triplex(&["extract"], out.path()).status.code(), Some(0));
    let path = out.path().join("annotation_sample.csv");
    assert_eq!(triplex(&["sample"], out.path()).status.code(), Some(0));
    let a = fs::read_to_string(&path).unwrap();
    assert_eq!(triplex(&["sample"], out.path()).status.code(), Some(0));
    assert_eq!(fs::read_to_string(&path).unwrap(), a);
    assert!(a.starts_with("variant,run_index,doc_id,article_id,subject,predicate,object,"));
    assert_eq!(a.lines().count(), 1 + 4 * 10);

    assert_eq!(triplex(&["sample", "--seed", "7"], out.path()).status.code(), Some(0));
    assert_ne!(fs::read_to_string(&path).unwrap(), a);

    assert_eq!(triplex(&["sample", "--variant", "few-shot"], out.path()).status.code(), Some(0));
    let few = fs::read_to_string(&path).unwrap();
    let want: Vec<&str> = a.lines().skip(1).filter(|l| l.starts_with("few-shot,")).collect();
    let got: Vec<&str> = few.lines().skip(1).collect();
    assert_eq!(got, want, "a variant's sample does not depend on the other variants");
}

#[test]
fn run_all_matches_goldens() {
    let out = tempfile::tempdir().unwrap();
    let o = triplex(&["run-all"], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let read = |p: &str| fs::read_to_string(out.path().join(p)).unwrap();
    check_golden("zero-shot.jsonl", &read("runs/zero-shot.jsonl"));
    check_golden("heatmap.svg", &read("report/heatmap.svg"));
    check_golden("metrics.csv", &read("report/metrics.csv"));

    let heat = read("report/heatmap.svg");
    assert_eq!(heat.matches("class=\"cell\"").count(), 15 * 4);
    let report: serde_json::Value = serde_json::from_str(&read("report/report.json")).unwrap();
    assert!(report.get("files").is_some());
}
