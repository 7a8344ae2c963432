//! End-to-end smoke test of the command-line pipeline: synthesize data,
//! cache ground truth, train, fit the baseline, query, evaluate, ablate,
//! search, and summarize — all through the real binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kdist() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kdist"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn run_ok(cmd: &mut Command) -> String {
    let out = run(cmd);
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn full_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().expect("tempdir");
    let at = |name: &str| dir.path().join(name);

    // 1. Synthesize a small dataset.
    let data = at("points.csv");
    let synth_out = run_ok(kdist().args([
        "synth",
        "--n",
        "150",
        "--seed",
        "7",
        "--out",
        path_str(&data),
        "--format",
        "csv",
    ]));
    assert!(synth_out.contains("150 points"), "got: {synth_out}");
    assert!(data.is_file());

    // 2. Run configuration shared by the remaining steps.
    let config = at("run.json");
    fs::write(
        &config,
        format!(
            r#"{{
              "dataset": {{"path": {data:?}, "format": "csv", "k_max": 4}},
              "model": {{"type": "decision_tree", "max_depth": 6, "min_samples_split": 2}},
              "trainer": {{"iterations": 2}},
              "eval": {{"ks": [1, 2, 4]}},
              "search": {{"trials": 3, "families": ["decision_tree"]}},
              "seed": 7
            }}"#,
            data = path_str(&data)
        ),
    )
    .expect("write config");
    let cfg = ["--config", path_str(&config)];

    // 3. Cache the ground-truth table and reuse it everywhere below.
    let table = at("table.bin");
    let table_out = run_ok(
        kdist()
            .args(["kdist"])
            .args(cfg)
            .args(["--out", path_str(&table)]),
    );
    assert!(
        table_out.contains("150 points x k_max 4"),
        "got: {table_out}"
    );
    let cached = ["--table", path_str(&table)];

    // 4. Train a learned index.
    let learned = at("learned.idx");
    let train_out = run_ok(
        kdist()
            .args(["train"])
            .args(cfg)
            .args(cached)
            .args(["--out", path_str(&learned)]),
    );
    let train_json: serde_json::Value = serde_json::from_str(&train_out).expect("train JSON");
    assert_eq!(train_json["model"], "decision_tree");
    assert_eq!(train_json["css_trace"].as_array().map(Vec::len), Some(2));
    assert!(learned.is_file());

    // 5. Fit the baseline index.
    let cop = at("cop.idx");
    let base_out = run_ok(
        kdist()
            .args(["baseline"])
            .args(cfg)
            .args(cached)
            .args(["--out", path_str(&cop)]),
    );
    let base_json: serde_json::Value = serde_json::from_str(&base_out).expect("baseline JSON");
    assert_eq!(base_json["model"], "cop");

    // 6. Queries: both indexes filter differently but must return the same
    //    exact answer; a database point queries by index, outsiders by
    //    coordinates.
    let mut answers = Vec::new();
    for index in [&learned, &cop] {
        let q_out = run_ok(kdist().args(["query"]).args(cfg).args([
            "--index",
            path_str(index),
            "--k",
            "2",
            "--point-index",
            "3",
        ]));
        let q: serde_json::Value = serde_json::from_str(&q_out).expect("query JSON");
        let ids: Vec<u64> = q["result"]
            .as_array()
            .expect("result array")
            .iter()
            .map(|v| v.as_u64().expect("index"))
            .collect();
        assert!(!ids.contains(&3), "query point must exclude itself");
        let decided = q["included"].as_u64().unwrap()
            + q["candidates"].as_u64().unwrap()
            + q["rejected"].as_u64().unwrap();
        assert_eq!(decided, 149, "every other point gets classified");
        answers.push(ids);
    }
    assert_eq!(
        answers[0], answers[1],
        "filter choice cannot change the answer"
    );

    let external = run_ok(kdist().args(["query"]).args(cfg).args([
        "--index",
        path_str(&learned),
        "--k",
        "1",
        "--point",
        "50.0,50.0",
    ]));
    assert!(external.contains("\"result\""));

    // 7. Evaluate both indexes into one metrics file.
    let metrics = at("metrics.csv");
    for (index, run_id) in [(&learned, "tree"), (&cop, "cop")] {
        run_ok(kdist().args(["eval"]).args(cfg).args([
            "--index",
            path_str(index),
            "--metrics",
            path_str(&metrics),
            "--run-id",
            run_id,
        ]));
    }
    let body = fs::read_to_string(&metrics).expect("metrics exists");
    let mut lines = body.lines();
    let header = lines.next().expect("header");
    assert!(header.starts_with("run_id,dataset,model_type,"));
    assert_eq!(header.split(',').count(), 14);
    assert_eq!(lines.clone().count(), 2);
    assert!(lines.any(|l| l.starts_with("cop,") && l.contains(",cop,")));

    // 8. Ablation grid appends 12 rows.
    run_ok(kdist().args(["ablate"]).args(cfg).args(cached).args([
        "--metrics",
        path_str(&metrics),
        "--run-id",
        "grid",
    ]));
    let rows = fs::read_to_string(&metrics).unwrap().lines().count() - 1;
    assert_eq!(rows, 2 + 12);

    // 9. Random search appends one row per trial and saves the best index.
    let best = at("best.idx");
    let search_out = run_ok(kdist().args(["search"]).args(cfg).args(cached).args([
        "--metrics",
        path_str(&metrics),
        "--out",
        path_str(&best),
    ]));
    assert!(
        search_out.contains("3 trials, 3 succeeded, 0 failed"),
        "got: {search_out}"
    );
    assert!(best.is_file());
    let rows = fs::read_to_string(&metrics).unwrap().lines().count() - 1;
    assert_eq!(rows, 2 + 12 + 3);

    // 10. Skyline over everything, plus the trade-off plot.
    let sky = at("skyline.csv");
    let svg = at("tradeoff.svg");
    let sky_out = run_ok(kdist().args([
        "skyline",
        "--metrics",
        path_str(&metrics),
        "--out",
        path_str(&sky),
        "--svg",
        path_str(&svg),
    ]));
    assert!(sky_out.contains("skyline:"), "got: {sky_out}");
    let sky_body = fs::read_to_string(&sky).expect("skyline csv");
    assert!(
        sky_body.lines().count() >= 2,
        "at least one undominated row"
    );
    let svg_body = fs::read_to_string(&svg).expect("svg");
    assert!(svg_body.starts_with("<svg"));
    assert!(svg_body.contains("(baseline)"), "baseline series labeled");
}

#[test]
fn bad_invocations_fail_cleanly() {
    let dir = tempfile::tempdir().expect("tempdir");
    let data = dir.path().join("points.csv");
    run_ok(kdist().args([
        "synth",
        "--n",
        "30",
        "--out",
        data.to_str().unwrap(),
        "--format",
        "csv",
    ]));

    // Flags-only mode needs both dataset and format.
    let out = run(kdist().args([
        "kdist",
        "--dataset",
        data.to_str().unwrap(),
        "--out",
        "t.bin",
    ]));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--format"));

    // Query needs exactly one of --point / --point-index.
    let out = run(kdist().args([
        "query",
        "--dataset",
        data.to_str().unwrap(),
        "--format",
        "csv",
        "--index",
        "missing.idx",
        "--k",
        "1",
    ]));
    assert!(!out.status.success());

    // Skyline on a missing metrics file reports the path.
    let missing = dir.path().join("nope.csv");
    let out = run(kdist().args(["skyline", "--metrics", missing.to_str().unwrap()]));
    assert!(!out.status.success());
}
