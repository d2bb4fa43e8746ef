use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn memorec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memorec"))
        .args(args)
        .env_remove("MEMOREC_INDEX")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn ingest_neighbours(dir: &TempDir) -> PathBuf {
    let idx = dir.path().join("corpus.idx");
    let out = memorec(&[
        "ingest",
        "--in",
        fixtures().join("neighbors").to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    idx
}

fn recommend_args<'a>(idx: &'a str, model: &'a str, context: &'a str, n: &'a str) -> Vec<&'a str> {
    vec![
        "recommend", "--index", idx, "--model", model, "--context-kind", "class", "--context",
        context, "--scheme", "IEs", "--k", "2", "--k-contexts", "2", "--n", n,
    ]
}

#[test]
fn ingest_writes_index_and_report() {
    let dir = TempDir::new().unwrap();
    let idx = dir.path().join("d.idx");
    let report = dir.path().join("report.csv");
    let out = memorec(&[
        "ingest",
        "--in",
        fixtures().join("dedup").to_str().unwrap(),
        "--out",
        idx.to_str().unwrap(),
        "--schemes",
        "SEc,IEs",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(std::fs::read(&idx).unwrap().starts_with(b"MEMOREC-IDX\n1\n"));
    let report = std::fs::read_to_string(report).unwrap();
    assert_eq!(report.lines().count(), 4);
    assert!(report.contains("web.json,duplicate,"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("accepted=2 duplicate=1"));
}

#[test]
fn ingest_failures_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let idx = dir.path().join("d.idx");
    let missing = dir.path().join("nope");
    let out = memorec(&["ingest", "--in", missing.to_str().unwrap(), "--out", idx.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let out = memorec(&[
        "ingest", "--in", ".", "--out", idx.to_str().unwrap(), "--schemes", "XYZ",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn recommend_prints_ranked_csv() {
    let dir = TempDir::new().unwrap();
    let idx = ingest_neighbours(&dir);
    let model = fixtures().join("web.json");
    let out = memorec(&recommend_args(idx.to_str().unwrap(), model.to_str().unwrap(), "Page", "10"));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = stdout.lines().map(|l| l.split(',').collect()).collect();
    let items: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(items, ["css", "links", "content"]);
    assert_eq!(rows[0][0], "1");
    let scores: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn recommend_edge_cases() {
    let dir = TempDir::new().unwrap();
    let idx = ingest_neighbours(&dir);
    let idx = idx.to_str().unwrap();
    let model = fixtures().join("web.ecore");
    let model = model.to_str().unwrap();

    let out = memorec(&recommend_args(idx, model, "Page", "0"));
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());

    let out = memorec(&recommend_args(idx, model, "NoSuch", "5"));
    assert_eq!(code(&out), 3);

    let bogus = dir.path().join("bogus.json");
    std::fs::write(&bogus, "{").unwrap();
    let out = memorec(&recommend_args(idx, bogus.to_str().unwrap(), "Page", "5"));
    assert_eq!(code(&out), 1);

    let out = memorec(&recommend_args("/nonexistent.idx", model, "Page", "5"));
    assert_eq!(code(&out), 1);
}

#[test]
fn environment_index_wins_over_flag() {
    let dir = TempDir::new().unwrap();
    let idx = ingest_neighbours(&dir);
    let model = fixtures().join("web.json");
    let out = Command::new(env!("CARGO_BIN_EXE_memorec"))
        .args(recommend_args("/nonexistent.idx", model.to_str().unwrap(), "Page", "3"))
        .env("MEMOREC_INDEX", &idx)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
}

#[test]
fn evaluate_is_reproducible_and_checks_size() {
    let dir = TempDir::new().unwrap();
    let idx = ingest_neighbours(&dir);
    let idx = idx.to_str().unwrap();
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    let args = [
        "evaluate", "--index", idx, "--scheme", "SEs", "--k", "5", "--cutoffs", "1,5,10,15,20",
        "--seed", "42", "--folds", "2", "--no-timing",
    ];
    let first = memorec(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let second = memorec(&args);
    assert_eq!(first.stdout, second.stdout);
    let stdout = String::from_utf8(first.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("mean,")).count(), 5);

    let mut with_files = args.to_vec();
    with_files.extend(["--csv", csv.to_str().unwrap(), "--json", json.to_str().unwrap()]);
    assert_eq!(code(&memorec(&with_files)), 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), stdout);
    assert!(std::fs::read_to_string(&json).unwrap().contains("\"aggregate\""));

    let out = memorec(&["evaluate", "--index", idx, "--folds", "20"]);
    assert_eq!(code(&out), 1);
}
