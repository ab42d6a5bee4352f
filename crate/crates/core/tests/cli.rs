use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn pmlkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmlkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field<'a>(line: &'a str, key: &str) -> &'a str {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {line:?}"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn design_counting_for_unit_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = pmlkit(&[
        "design",
        "--scenario",
        scenario("counting.json").to_str().unwrap(),
        "--eps",
        "1.0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert_eq!(field(&text, "h"), "3");
    assert_eq!(field(&text, "mode"), "safe");
    let mech = read_json(&dir.path().join("mechanism.json"));
    assert_eq!(mech["builder"], "utility_safe");
    assert_eq!(mech["parameters"]["h"], 3);
    let leakage = read_json(&dir.path().join("leakage.json"));
    let worst = leakage["worst_case"].as_f64().unwrap();
    assert!((worst - (7f64 / 3.0).ln()).abs() < 1e-12);
}

#[test]
fn design_with_zero_budget_is_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let out = pmlkit(&[
        "design",
        "--scenario",
        scenario("counting.json").to_str().unwrap(),
        "--eps",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(field(&stdout(&out), "h"), "1");
    let mech = read_json(&dir.path().join("mechanism.json"));
    for row in mech["probs"].as_array().unwrap() {
        for p in row.as_array().unwrap() {
            assert!((p.as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-15);
        }
    }
}

#[test]
fn design_optimal_for_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = pmlkit(&[
        "design",
        "--scenario",
        scenario("example1.json").to_str().unwrap(),
        "--h",
        "2",
        "--mode",
        "optimal",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let text = stdout(&out);
    let eps: f64 = field(&text, "min_eps").parse().unwrap();
    assert!((eps - 2f64.ln()).abs() < 1e-5, "{text}");
    let mech = read_json(&dir.path().join("mechanism.json"));
    let min_eps = mech["parameters"]["min_eps_nats"].as_f64().unwrap();
    assert!((min_eps - 2f64.ln()).abs() < 1e-5);
}

#[test]
fn design_reports_bits() {
    let dir = tempfile::tempdir().unwrap();
    let out = pmlkit(&[
        "design",
        "--scenario",
        scenario("cyclic_uniform.json").to_str().unwrap(),
        "--h",
        "3",
        "--log-base",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(stdout(&out).contains("min_eps=1.000000 bits"));
}

#[test]
fn design_needs_exactly_one_target() {
    let path = scenario("counting.json");
    let both = pmlkit(&["design", "--scenario", path.to_str().unwrap(), "--eps", "1", "--h", "2"]);
    assert_eq!(both.status.code(), Some(2));
    let neither = pmlkit(&["design", "--scenario", path.to_str().unwrap()]);
    assert_eq!(neither.status.code(), Some(2));
}

#[test]
fn analyze_round_trips_designed_mechanism() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("counting.json");
    stdout(&pmlkit(&[
        "design",
        "--scenario",
        path.to_str().unwrap(),
        "--h",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let designed = read_json(&dir.path().join("leakage.json"));
    let mech_path = dir.path().join("mechanism.json");
    let out = pmlkit(&[
        "analyze",
        "--scenario",
        path.to_str().unwrap(),
        "--mechanism",
        mech_path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let a = report["leakage"]["worst_case"].as_f64().unwrap();
    let b = designed["worst_case"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-9);
    assert!((a - 3.5f64.ln()).abs() < 1e-9);
    assert_eq!(report["worst_case_order"], 4);
    assert_eq!(report["worst_case_value"], -9.0);
    assert_eq!(read_json(&dir.path().join("analysis.json")), report);
}

#[test]
fn analyze_rejects_mismatched_mechanism() {
    let dir = tempfile::tempdir().unwrap();
    let mech = dir.path().join("mech.json");
    fs::write(&mech, r#"{"builder": "hand", "probs": [[0.5, 0.5], [1.0, 0.0]]}"#).unwrap();
    let out = pmlkit(&[
        "analyze",
        "--scenario",
        scenario("example1.json").to_str().unwrap(),
        "--mechanism",
        mech.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn bad_scenarios_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "prior.json",
            r#"{"prior": [0.6, 0.6], "utility_order": [[1, 2], [2, 1]]}"#,
        ),
        (
            "order.json",
            r#"{"prior": [0.5, 0.5], "utility_order": [[1, 1], [2, 1]]}"#,
        ),
        ("dims.json", r#"{"prior": [0.5, 0.5], "utility_order": [[1, 2]]}"#),
        ("syntax.json", r#"{"prior": [0.5, 0.5"#),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        let out = pmlkit(&["tradeoff", "--scenario", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
    }
    let missing = pmlkit(&[
        "tradeoff",
        "--scenario",
        dir.path().join("absent.json").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn tradeoff_curve_for_counting_query() {
    let dir = tempfile::tempdir().unwrap();
    let out = pmlkit(&[
        "tradeoff",
        "--scenario",
        scenario("counting.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let text = stdout(&out);
    assert_eq!(fs::read_to_string(dir.path().join("curve.csv")).unwrap(), text);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let eps: Vec<f64> = reader.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
    let expected = [
        0.0,
        (7f64 / 3.0).ln(),
        (7f64 / 3.0).ln(),
        3.5f64.ln(),
        3.5f64.ln(),
        7f64.ln(),
        7f64.ln(),
    ];
    assert_eq!(eps.len(), 7);
    for (a, b) in eps.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{eps:?}");
    }
    for h in 1..=7 {
        let w = read_json(&dir.path().join(format!("witness_h{h}.json")));
        assert_eq!(w["parameters"]["h"], h);
    }
}

#[test]
fn tradeoff_optimal_without_pruning_matches() {
    let path = scenario("example1.json");
    let pruned = stdout(&pmlkit(&[
        "tradeoff",
        "--scenario",
        path.to_str().unwrap(),
        "--mode",
        "optimal",
    ]));
    let full = stdout(&pmlkit(&[
        "tradeoff",
        "--scenario",
        path.to_str().unwrap(),
        "--mode",
        "optimal",
        "--no-prune",
    ]));
    let parse = |t: &str| -> Vec<f64> {
        csv::Reader::from_reader(t.as_bytes())
            .records()
            .map(|r| r.unwrap()[1].parse().unwrap())
            .collect()
    };
    for (a, b) in parse(&pruned).iter().zip(parse(&full)) {
        assert!((a - b).abs() < 1e-5);
    }
}

#[test]
fn reproduce_sweeps_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    for fig in ["fig2", "fig3"] {
        stdout(&pmlkit(&["reproduce", fig, "--out", dir.path().to_str().unwrap()]));
        let text = fs::read_to_string(dir.path().join(format!("{fig}.csv"))).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(
            reader.headers().unwrap().iter().collect::<Vec<_>>(),
            ["p_min", "h", "mode", "min_eps", "naive"]
        );
        // 10 priors x 4 thresholds x 2 modes
        assert_eq!(reader.records().count(), 80);
        let meta = read_json(&dir.path().join(format!("{fig}.meta.json")));
        assert_eq!(meta["figure"], fig);
        assert_eq!(meta["tolerances"]["bisection"], 1e-6);
    }
}

#[test]
fn reproduce_rejects_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = pmlkit(&[
        "reproduce",
        "fig1",
        "--trials",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
