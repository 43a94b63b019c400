//! End-to-end runs of the compiled binary: exit codes, output files, and
//! byte-level reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rsgnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsgnn"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn assert_code(out: &Output, want: i32) {
    let got = out.status.code().expect("no signal");
    assert_eq!(
        got,
        want,
        "exit {got}, want {want}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// 30 nodes, 2 classes, 4 features; small enough for sub-second commands.
fn make_dataset(dir: &Path) {
    let out = rsgnn(&[
        "synth",
        "--blocks",
        "2",
        "--per-block",
        "15",
        "--p-in",
        "0.4",
        "--p-out",
        "0.05",
        "--feature-dim",
        "4",
        "--seed",
        "7",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
}

#[test]
fn synth_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    make_dataset(&a);
    make_dataset(&b);
    for name in ["meta.json", "edges.tsv", "features.csv", "labels.csv"] {
        let fa = fs::read(a.join(name)).unwrap();
        let fb = fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between identical seeds");
    }
}

#[test]
fn select_resolves_class_multiple_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    make_dataset(&data);
    let r1 = tmp.path().join("r1.json");
    let r2 = tmp.path().join("r2.json");
    for out in [&r1, &r2] {
        let run = rsgnn(&[
            "select",
            "--dataset",
            data.to_str().unwrap(),
            "--selector",
            "kmeans",
            "--k",
            "2c",
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_code(&run, 0);
    }
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
    let reps: serde_json::Value = serde_json::from_str(&fs::read_to_string(&r1).unwrap()).unwrap();
    assert_eq!(reps["selector"], "kmeans");
    assert_eq!(reps["k"], 4, "2c with 2 classes");
    assert_eq!(reps["nodes"].as_array().unwrap().len(), 4);
}

#[test]
fn select_then_eval_appends_csv_with_nmi() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    make_dataset(&data);
    let reps = tmp.path().join("reps.json");
    let clusters = tmp.path().join("clusters.json");
    let run = rsgnn(&[
        "select",
        "--dataset",
        data.to_str().unwrap(),
        "--selector",
        "rsgnn",
        "--k",
        "4",
        "--embed-dim",
        "8",
        "--epochs",
        "5",
        "--out",
        reps.to_str().unwrap(),
        "--clusters-out",
        clusters.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    let assigned: Vec<usize> =
        serde_json::from_str(&fs::read_to_string(&clusters).unwrap()).unwrap();
    assert_eq!(assigned.len(), 30);
    assert!(assigned.iter().all(|&c| c < 4));

    let csv = tmp.path().join("results.csv");
    for _ in 0..2 {
        let run = rsgnn(&[
            "eval",
            "--dataset",
            data.to_str().unwrap(),
            "--reps",
            reps.to_str().unwrap(),
            "--runs",
            "2",
            "--clusters",
            clusters.to_str().unwrap(),
            "--max-epochs",
            "20",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_code(&run, 0);
    }
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5, "header plus 4 rows:\n{text}");
    assert_eq!(lines[0], "selector,seed,k,accuracy,coverage,nmi");
    for row in &lines[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 6, "row {row}");
        assert_eq!(cols[0], "rsgnn");
        assert_eq!(cols[2], "4");
        let acc: f64 = cols[3].parse().unwrap();
        let cov: f64 = cols[4].parse().unwrap();
        let nmi: f64 = cols[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
        assert!((0.0..=1.0).contains(&cov));
        assert!((0.0..=1.0).contains(&nmi));
    }
    // Identical seeds in both invocations produce identical rows.
    assert_eq!(lines[1], lines[3]);
    assert_eq!(lines[2], lines[4]);
}

#[test]
fn graph_selectors_refuse_graph_free_datasets() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    make_dataset(&data);
    fs::remove_file(data.join("edges.tsv")).unwrap();
    let reps = tmp.path().join("reps.json");
    let base = [
        "select",
        "--dataset",
        data.to_str().unwrap(),
        "--selector",
        "popular",
        "--k",
        "3",
        "--out",
        reps.to_str().unwrap(),
    ];
    let run = rsgnn(&base);
    assert_code(&run, 2);
    assert!(
        stderr_of(&run).contains("selector requires graph"),
        "stderr: {}",
        stderr_of(&run)
    );
    // A kNN-built structure substitutes for the missing edges.
    let mut with_knn: Vec<&str> = base.to_vec();
    with_knn.push("--knn-mode");
    let run = rsgnn(&with_knn);
    assert_code(&run, 0);
    assert!(reps.exists());
}

#[test]
fn eval_graph_mode_needs_edges() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    make_dataset(&data);
    let reps = tmp.path().join("reps.json");
    let run = rsgnn(&[
        "select",
        "--dataset",
        data.to_str().unwrap(),
        "--selector",
        "random",
        "--k",
        "4",
        "--out",
        reps.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    fs::remove_file(data.join("edges.tsv")).unwrap();
    let csv = tmp.path().join("results.csv");
    let args = |mode: &'static str| {
        vec![
            "eval".to_string(),
            "--dataset".into(),
            data.to_str().unwrap().into(),
            "--reps".into(),
            reps.to_str().unwrap().into(),
            "--mode".into(),
            mode.into(),
            "--max-epochs".into(),
            "10".into(),
            "--out".into(),
            csv.to_str().unwrap().into(),
        ]
    };
    let graph_args: Vec<String> = args("graph");
    let graph_refs: Vec<&str> = graph_args.iter().map(String::as_str).collect();
    let run = rsgnn(&graph_refs);
    assert_code(&run, 2);
    assert!(stderr_of(&run).contains("graph mode"), "stderr: {}", stderr_of(&run));
    let mlp_args: Vec<String> = args("mlp");
    let mlp_refs: Vec<&str> = mlp_args.iter().map(String::as_str).collect();
    let run = rsgnn(&mlp_refs);
    assert_code(&run, 0);
}

#[test]
fn oversized_budget_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    make_dataset(&data);
    let run = rsgnn(&[
        "select",
        "--dataset",
        data.to_str().unwrap(),
        "--selector",
        "ffs",
        "--k",
        "100",
        "--out",
        tmp.path().join("r.json").to_str().unwrap(),
    ]);
    assert_code(&run, 2);
    assert!(stderr_of(&run).contains("budget"), "stderr: {}", stderr_of(&run));
}

#[test]
fn missing_dataset_exits_2() {
    let run = rsgnn(&[
        "select",
        "--dataset",
        "/nonexistent/nowhere",
        "--selector",
        "random",
        "--k",
        "2",
        "--out",
        "/tmp/never-written.json",
    ]);
    assert_code(&run, 2);
}

#[test]
fn fon_brute_force_guard_exits_3() {
    let run = rsgnn(&[
        "fon", "--n", "40", "--m", "100", "--k", "12", "--seed", "1",
    ]);
    assert_code(&run, 3);
    assert!(stderr_of(&run).contains("subsets"), "stderr: {}", stderr_of(&run));
}

#[test]
fn gradcheck_exit_codes() {
    let run = rsgnn(&["gradcheck", "--seed", "5"]);
    assert_code(&run, 0);
    let run = rsgnn(&["gradcheck", "--seed", "5", "--corrupt-gradient"]);
    assert_code(&run, 4);
}

#[test]
fn bench_emits_rows_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    make_dataset(&data);
    let csv = tmp.path().join("bench.csv");
    let summary = tmp.path().join("summary.json");
    let run = rsgnn(&[
        "bench",
        "--dataset",
        data.to_str().unwrap(),
        "--selectors",
        "random,ffs",
        "--k",
        "4",
        "--runs",
        "2",
        "--max-epochs",
        "20",
        "--out",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5, "header plus 2 selectors x 2 runs:\n{text}");
    assert!(lines[1].starts_with("random,0,"));
    assert!(lines[2].starts_with("random,1,"));
    assert!(lines[3].starts_with("ffs,0,"));
    assert!(lines[4].starts_with("ffs,1,"));
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(parsed["k"], 4);
    assert_eq!(parsed["runs"], 2);
    let rows = parsed["selectors"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let m = row["mean"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&m));
        assert!(row["sd"].as_f64().unwrap() >= 0.0);
        assert!(row["winner"].is_boolean());
    }
}

#[test]
fn bench_requires_two_selectors_and_two_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    make_dataset(&data);
    let csv = tmp.path().join("bench.csv");
    let run = rsgnn(&[
        "bench",
        "--dataset",
        data.to_str().unwrap(),
        "--selectors",
        "random",
        "--k",
        "4",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_code(&run, 2);
    let run = rsgnn(&[
        "bench",
        "--dataset",
        data.to_str().unwrap(),
        "--selectors",
        "random,ffs",
        "--k",
        "4",
        "--runs",
        "1",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_code(&run, 2);
}

#[test]
fn fon_planted_gap_report_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.json");
    let b = tmp.path().join("b.json");
    for out in [&a, &b] {
        let run = rsgnn(&[
            "fon",
            "--planted",
            "--seed",
            "18",
            "--k",
            "4",
            "--selectors",
            "maxcover_cos,ffs",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_code(&run, 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["selector"], "maxcover_cos");
    assert!(entries[0]["ratio"].as_f64().unwrap() < 1.0);
}

#[test]
fn fon_dump_round_trips_through_fixture_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("inst");
    let run = rsgnn(&[
        "fon",
        "--n",
        "6",
        "--m",
        "9",
        "--seed",
        "4",
        "--dump",
        dir.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    let direct = tmp.path().join("direct.json");
    let run = rsgnn(&[
        "fon",
        "--fixture",
        dir.to_str().unwrap(),
        "--k",
        "2",
        "--selectors",
        "kmeans",
        "--out",
        direct.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&direct).unwrap()).unwrap();
    assert!(report["u_star"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    make_dataset(&data);
    let config = tmp.path().join("config.json");
    fs::write(&config, r#"{"rsgnn": {"epochs": 5, "embed_dim": 16}}"#).unwrap();
    let r1 = tmp.path().join("r1.json");
    let run = rsgnn(&[
        "select",
        "--dataset",
        data.to_str().unwrap(),
        "--selector",
        "rsgnn",
        "--k",
        "3",
        "--config",
        config.to_str().unwrap(),
        "--embed-dim",
        "8",
        "--out",
        r1.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    // Flag output must match a run configured purely by flags.
    let r2 = tmp.path().join("r2.json");
    let run = rsgnn(&[
        "select",
        "--dataset",
        data.to_str().unwrap(),
        "--selector",
        "rsgnn",
        "--k",
        "3",
        "--epochs",
        "5",
        "--embed-dim",
        "8",
        "--out",
        r2.to_str().unwrap(),
    ]);
    assert_code(&run, 0);
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
    // Unknown keys are rejected.
    fs::write(&config, r#"{"rsgnn": {"epoch": 5}}"#).unwrap();
    let run = rsgnn(&[
        "select",
        "--dataset",
        data.to_str().unwrap(),
        "--selector",
        "rsgnn",
        "--k",
        "3",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("r3.json").to_str().unwrap(),
    ]);
    assert_code(&run, 2);
}
