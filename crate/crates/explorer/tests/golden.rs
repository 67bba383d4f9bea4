//! Byte-level regression of the `explore` binary against checked-in
//! outputs. Set `UPDATE_GOLDEN=1` to rewrite them after an intended change.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use museum_core::explorer::RunMetrics;
use museum_core::params::Params;

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn catalog() -> PathBuf {
    manifest().join("../core/fixtures/sample_catalog.json")
}

fn fixture(name: &str) -> PathBuf {
    manifest().join("fixtures").join(name)
}

fn explore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_explore"))
        .args(args)
        .output()
        .expect("explore runs")
}

fn check_golden(case: &str, args: &[&str], files: &[&str]) {
    let out = tempfile::tempdir().unwrap();
    let out_dir = out.path().to_str().unwrap();
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", out_dir]);
    let result = explore(&full);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let golden = manifest().join("tests/golden").join(case);
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for file in files {
        let produced = fs::read_to_string(out.path().join(file)).unwrap();
        let expected_path = golden.join(file);
        if update {
            fs::create_dir_all(&golden).unwrap();
            fs::write(&expected_path, &produced).unwrap();
            continue;
        }
        let expected = fs::read_to_string(&expected_path)
            .unwrap_or_else(|_| panic!("missing {}; run with UPDATE_GOLDEN=1", expected_path.display()));
        assert!(produced == expected, "{case}/{file} differs from golden output");
    }
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scripted_run() {
    let (c, p, s) = (catalog(), fixture("params.toml"), fixture("demo_script.json"));
    check_golden(
        "script",
        &[
            "run",
            "--catalog",
            path(&c),
            "--params",
            path(&p),
            "--script",
            path(&s),
            "--seed",
            "42",
            "--ticks",
            "120",
            "--csv",
            "--strict",
        ],
        &["museum.json", "metrics.csv", "events.jsonl"],
    );
}

#[test]
fn random_agent() {
    let c = catalog();
    check_golden(
        "random",
        &[
            "agent",
            "--catalog",
            path(&c),
            "--policy",
            "random",
            "--steps",
            "80",
            "--seed",
            "5",
            "--csv",
        ],
        &["museum.json", "metrics.csv"],
    );
}

#[test]
fn focused_agent_table() {
    let c = catalog();
    check_golden(
        "focused",
        &[
            "agent",
            "--catalog",
            path(&c),
            "--policy",
            "focused",
            "--target",
            "thema.fishing",
            "--steps",
            "150",
            "--seed",
            "9",
        ],
        &["museum.json", "metrics.txt"],
    );
}

#[test]
fn golden_csv_round_trips() {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        return;
    }
    let text = fs::read_to_string(manifest().join("tests/golden/script/metrics.csv")).unwrap();
    let metrics = RunMetrics::from_csv(&text).unwrap();
    assert_eq!(metrics.ticks.len(), 120);
    assert!(metrics.rooms_created() >= 1);
    let table = fs::read_to_string(manifest().join("tests/golden/focused/metrics.txt")).unwrap();
    assert!(table.lines().all(|l| l.chars().count() <= 80));
}

#[test]
fn example_params_are_the_defaults() {
    let p = Params::from_path(fixture("params.toml"), true).unwrap();
    assert_eq!(p, Params::default());
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = path(&out);
    let c = catalog();

    let bad_script = dir.path().join("bad.json");
    fs::write(
        &bad_script,
        r#"[{"tick": 0, "event": {"type": "StandBefore", "object": "nowhere"}}]"#,
    )
    .unwrap();
    let r = explore(&[
        "run",
        "--catalog",
        path(&c),
        "--script",
        path(&bad_script),
        "--ticks",
        "5",
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("nowhere"));

    let unordered = dir.path().join("unordered.json");
    fs::write(
        &unordered,
        r#"[{"tick": 3, "event": {"type": "StandBefore", "object": "phare-creach"}},
            {"tick": 1, "event": {"type": "StandBefore", "object": "phare-creach"}}]"#,
    )
    .unwrap();
    let r = explore(&[
        "run",
        "--catalog",
        path(&c),
        "--script",
        path(&unordered),
        "--ticks",
        "5",
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(2));

    let params = dir.path().join("p.json");
    fs::write(&params, r#"{"gama": 0.1}"#).unwrap();
    let r = explore(&[
        "agent",
        "--catalog",
        path(&c),
        "--params",
        path(&params),
        "--policy",
        "random",
        "--steps",
        "3",
        "--strict",
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(2));

    let broken = dir.path().join("catalog.json");
    fs::write(&broken, r#"{"entities": [], "objects": [{"id": "x"}]}"#).unwrap();
    let r = explore(&[
        "agent",
        "--catalog",
        path(&broken),
        "--policy",
        "wanderer",
        "--steps",
        "3",
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(2));

    let r = explore(&[
        "agent",
        "--catalog",
        path(&c),
        "--policy",
        "focused",
        "--target",
        "thema.nothing",
        "--steps",
        "3",
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(2));

    let r = explore(&[
        "agent",
        "--catalog",
        path(&c),
        "--policy",
        "sleepy",
        "--steps",
        "3",
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    let r = explore(&[
        "agent",
        "--catalog",
        path(&missing),
        "--policy",
        "random",
        "--steps",
        "3",
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn empty_script_creates_no_rooms() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("empty.json");
    fs::write(&script, "[]").unwrap();
    let out = dir.path().join("out");
    let c = catalog();
    let r = explore(&[
        "run",
        "--catalog",
        path(&c),
        "--script",
        path(&script),
        "--ticks",
        "100",
        "--out",
        path(&out),
        "--csv",
    ]);
    assert!(r.status.success());
    let metrics = RunMetrics::from_csv(&fs::read_to_string(out.join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(metrics.rooms_created(), 0);
    assert_eq!(metrics.ticks.len(), 100);
}
