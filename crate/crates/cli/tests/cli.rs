use std::process::{Command, Output};

fn condtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condtest")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> serde_json::Value {
    let out = condtest(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json report");
    assert_eq!(v["schema_version"], 1);
    v
}

fn error(args: &[&str]) -> (i32, serde_json::Value) {
    let out = condtest(args);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("json error");
    assert!(v["error"]["message"].is_string());
    (out.status.code().unwrap(), v)
}

#[test]
fn every_command_succeeds() {
    let cases: &[&[&str]] = &[
        &["pull-partition", "--generator", "zipf:1", "--n", "512", "--eta", "0.1"],
        &["pull-partition", "--n", "512", "--eta", "0.05", "--gamma", "0.2"],
        &["assess-partition", "--n", "256", "--epsilon", "0.3", "--partition", "128,256"],
        &["assess-partition", "--n", "256", "--epsilon", "0.3", "--eta", "0.2", "--model", "uncond"],
        &["test-uniformity", "--n", "256", "--epsilon", "0.3", "--model", "nonadaptive"],
        &["learn", "--generator", "khist:2", "--n", "256", "--L", "2", "--epsilon", "0.3"],
        &["test-property", "--n", "256", "--property", "khist", "--k", "2", "--epsilon", "0.3"],
        &["atlas-learn", "--n", "256", "--k", "4", "--epsilon", "0.3"],
        &["atlas-test", "--generator", "support:8", "--n", "256", "--s0", "8", "--epsilon", "0.3"],
        &["atlas-tolerant-test", "--n", "128", "--s0", "128", "--eta", "0.2", "--epsilon", "0.3"],
    ];
    for args in cases {
        let v = report(args);
        assert_eq!(v["trials"].as_array().unwrap().len(), 1, "{args:?}");
        assert!(v["trials"][0]["verdict"].is_string());
    }
}

#[test]
fn pull_detail_is_a_partition_of_the_domain() {
    let v = report(&["pull-partition", "--n", "300", "--eta", "0.1", "--seed", "4"]);
    let ends = v["trials"][0]["detail"]["partition"].as_array().unwrap();
    assert_eq!(ends.last().unwrap(), 300);
    assert_eq!(v["trials"][0]["verdict"], "fine");
}

#[test]
fn errors_are_json_objects() {
    let (code, v) = error(&["learn", "--L", "0", "--epsilon", "0.2"]);
    assert_eq!((code, v["error"]["kind"].as_str().unwrap()), (1, "invalid-parameter"));
    let (code, v) = error(&["no-such-command"]);
    assert_eq!((code, v["error"]["kind"].as_str().unwrap()), (2, "usage"));
    let (_, v) = error(&["test-uniformity", "--generator", "wave:3", "--epsilon", "0.3"]);
    assert_eq!(v["error"]["kind"], "invalid-parameter");
    let (_, v) = error(&["test-property", "--property", "khist", "--epsilon", "0.3"]);
    assert!(v["error"]["message"].as_str().unwrap().contains("--k"));
    let (_, v) = error(&["experiment", "/nonexistent/config.json"]);
    assert_eq!(v["error"]["kind"], "io");
}

#[test]
fn reads_distribution_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    std::fs::write(&path, r#"{"n": 4, "p": [0.4, 0.1, 0.4, 0.1]}"#).unwrap();
    let v = report(&["test-uniformity", "--input", path.to_str().unwrap(), "--epsilon", "0.3"]);
    assert!((v["annotations"]["d_uniform"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    std::fs::write(&path, r#"{"kind": "half-heavy", "epsilon": 0.5, "n": 64}"#).unwrap();
    let v = report(&["test-uniformity", "--input", path.to_str().unwrap(), "--epsilon", "0.3"]);
    assert!((v["annotations"]["d_uniform"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn experiment_config_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    std::fs::write(
        &config,
        r#"{"generator": {"kind": "half-heavy", "epsilon": 0.25, "n": 256, "seed": 1},
            "algorithm": "uniformity", "model": "adaptive", "epsilon": 0.25, "delta": 0.2,
            "trials": 8, "seed": 42}"#,
    )
    .unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let args = ["experiment", config.to_str().unwrap(), "--format", "csv", "--no-runtime", "--workers", workers];
        let status = condtest(&[&args[..], &["--out", out.to_str().unwrap()]].concat()).status;
        assert!(status.success());
        std::fs::read_to_string(out).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "3"));
    assert_eq!(a.lines().next().unwrap(), "trial,seed,verdict,uncond_queries,cond_queries,truth_distance,runtime_ms");
    assert_eq!(a.lines().count(), 9);
}
