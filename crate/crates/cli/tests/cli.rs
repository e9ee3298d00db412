use std::path::Path;
use std::process::{Command, Output};

fn teim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teim"))
        .args(args)
        .env("TEIM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(teim(&["--help"]).status.code(), Some(0));
    assert_eq!(teim(&["--version"]).status.code(), Some(0));
}

#[test]
fn invalid_flags_exit_one() {
    for args in [
        &["bogus"][..],
        &["approx", "--experiment", "ex3"],
        &["approx", "--experiment", "ex1", "--m1", "2"],
        &["basis", "--in", "x.bin", "--out", "y.bin"],
    ] {
        let o = teim(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn pipeline_from_snapshots_to_points() {
    let dir = tempfile::tempdir().unwrap();
    let (snap, fb, pb, grid, idx) = (
        dir.path().join("x.bin"),
        dir.path().join("f.bin"),
        dir.path().join("p.bin"),
        dir.path().join("grid.json"),
        dir.path().join("idx.json"),
    );
    assert!(teim(&["snapshots", "--experiment", "ex1", "--out", arg(&snap)])
        .status
        .success());
    assert_eq!(
        std::fs::metadata(&snap).unwrap().len(),
        4 + 4 + 1 + 3 * 8 + 20 * 20 * 225 * 8
    );

    assert!(
        teim(&["basis", "--in", arg(&snap), "--m1", "3", "--m2", "4", "--out", arg(&fb)])
            .status
            .success()
    );
    assert!(
        teim(&["points", "--basis", arg(&fb), "--method", "teim", "--out", arg(&grid)])
            .status
            .success()
    );
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&grid).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
    assert_eq!(doc["cols"].as_array().unwrap().len(), 4);
    assert_eq!(doc["pairs"].as_array().unwrap().len(), 12);

    let two = dir.path().join("two.json");
    assert!(
        teim(&["points", "--basis", arg(&fb), "--method", "2ddeim", "--out", arg(&two)])
            .status
            .success()
    );
    let two: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&two).unwrap()).unwrap();
    assert_eq!((&two["rows"], &two["cols"]), (&doc["rows"], &doc["cols"]));

    assert!(teim(&[
        "basis",
        "--in",
        arg(&snap),
        "--pod",
        "--k",
        "6",
        "--center",
        "--out",
        arg(&pb)
    ])
    .status
    .success());
    assert!(
        teim(&["points", "--basis", arg(&pb), "--method", "deim", "--out", arg(&idx)])
            .status
            .success()
    );
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&idx).unwrap()).unwrap();
    assert_eq!(doc["indices"].as_array().unwrap().len(), 6);

    // Wrong basis kind for the method is a usage error.
    assert_eq!(
        teim(&["points", "--basis", arg(&pb), "--method", "teim", "--out", arg(&grid)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn rank_deficient_basis_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let (snap, out) = (dir.path().join("x.bin"), dir.path().join("b.bin"));
    // The Allen-Cahn trajectory on a 6x6 grid has numerical rank far below 30.
    assert!(teim(&[
        "snapshots",
        "--experiment",
        "allen-cahn",
        "--n",
        "6",
        "--out",
        arg(&snap)
    ])
    .status
    .success());
    let o = teim(&["basis", "--in", arg(&snap), "--pod", "--k", "30", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn approx_report_is_reproducible() {
    let run = || teim(&["approx", "--experiment", "ex1", "--m1", "3", "--m2", "3"]);
    let (a, b) = (run(), run());
    assert!(a.status.success());
    let strip = |o: &Output| -> Vec<String> {
        stdout(o)
            .lines()
            .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
            .collect()
    };
    let lines = strip(&a);
    assert_eq!(lines[0], "experiment,method,m1,m2,m,k1,k2,k,xi");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("ex1,teim,3,3,,,,,"));
    assert!(lines[2].starts_with("ex1,deim,,,9,,,,"));
    assert_eq!(lines, strip(&b));
}

#[test]
fn mor_matrix_row() {
    let o = teim(&[
        "mor",
        "--experiment",
        "allen-cahn",
        "--n",
        "12",
        "--k1",
        "3",
        "--k2",
        "3",
        "--m1",
        "3",
        "--m2",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..8], &["allen-cahn", "teim", "3", "3", "", "3", "3", ""]);
    let xi: f64 = row[8].parse().unwrap();
    assert!(xi.is_finite() && xi >= 0.0);
    assert_eq!(
        teim(&[
            "mor",
            "--experiment",
            "ex1",
            "--k1",
            "3",
            "--k2",
            "3",
            "--m1",
            "3",
            "--m2",
            "3"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn verify_passes() {
    let o = teim(&["verify", "--seed", "11"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 5);
    assert!(out.lines().all(|l| l.contains("PASS")));
}

#[test]
fn bench_reports_three_methods() {
    let o = teim(&["bench", "--n", "60", "--m1", "3", "--m2", "3", "--reps", "100"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let methods: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["teim_left_first", "teim_right_first", "deim"]);
    assert_eq!(teim(&["bench", "--n", "60", "--reps", "10"]).status.code(), Some(1));
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, snap) = (dir.path().join("ex2.json"), dir.path().join("x.bin"));
    std::fs::write(
        &cfg,
        r#"{"experiment":"ex2","grid_n":[8,6],"domain":[0.0,2.0],"time_domain":[0.0,2.0],"train_times":5,"test_times":7}"#,
    )
    .unwrap();
    let o = teim(&[
        "snapshots",
        "--experiment",
        "ex2",
        "--config",
        arg(&cfg),
        "--out",
        arg(&snap),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::metadata(&snap).unwrap().len(),
        4 + 4 + 1 + 3 * 8 + 8 * 6 * 5 * 8
    );
    let o = teim(&[
        "snapshots",
        "--experiment",
        "ex1",
        "--config",
        arg(&cfg),
        "--out",
        arg(&snap),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
