//! End-to-end tests of the `fdp` binary: worked examples, exit codes, file
//! outputs, and determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdp"))
        .args(args)
        .output()
        .expect("failed to spawn fdp")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process was signalled")
}

// ---------------------------------------------------------------------------
// compose
// ---------------------------------------------------------------------------

#[test]
fn compose_worked_example_has_four_segments_and_delta() {
    let out = fdp(&["compose", "approx:0.6931,0.1", "approx:0.6931,0.1"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!((doc["delta_at_zero"].as_f64().unwrap() - 0.19).abs() < 1e-12);
    assert_eq!(doc["segments"].as_array().unwrap().len(), 4);
}

#[test]
fn compose_gaussians_stays_in_closed_form() {
    let out = fdp(&["compose", "gdp:1", "gdp:1"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!((doc["mu"].as_f64().unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
    assert!(doc.get("segments").is_none());
}

#[test]
fn compose_identities_is_identity() {
    let out = fdp(&["compose", "approx:0,0", "approx:0,0"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["delta_at_zero"].as_f64().unwrap(), 0.0);
    let segs = doc["segments"].as_array().unwrap();
    assert_eq!(segs.len(), 1);
    assert_eq!(segs[0]["slope"].as_f64().unwrap(), -1.0);
    assert_eq!(segs[0]["width"].as_f64().unwrap(), 1.0);
}

#[test]
fn compose_mixed_inputs_need_a_grid() {
    let out = fdp(&["compose", "gdp:1", "approx:0.6931,0.1"]);
    assert_eq!(code(&out), 3);
    let out = fdp(&["compose", "gdp:1", "approx:0.6931,0.1", "--grid", "400"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!(doc["segments"].as_array().unwrap().len() > 10);
}

#[test]
fn compose_rejects_malformed_specs() {
    let out = fdp(&["compose", "approx:oops", "id"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
}

#[test]
fn compose_shifted_gaussians_keep_mu_and_delta() {
    let out = fdp(&["compose", "agdp:1,0.05", "gdp:1"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!((doc["mu"].as_f64().unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
    assert!((doc["delta_at_zero"].as_f64().unwrap() - 0.05).abs() < 1e-12);
}

#[test]
fn compose_writes_json_and_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("curve.json");
    let csv_path = dir.path().join("curve.csv");
    let out = fdp(&[
        "compose",
        "approx:0.6931,0.1",
        "approx:0.6931,0.1",
        "--out",
        json_path.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let doc: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(doc["segments"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("alpha,beta"));
    assert_eq!(csv.lines().count(), 1002);
    assert!(!csv.contains(';'));
}

#[test]
fn compose_round_trips_written_curves_through_file_specs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.json");
    let out = fdp(&[
        "compose",
        "approx:0.6931,0.1",
        "approx:1.3863,0.01",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    // Composing the written curve with the identity must reproduce it.
    let spec = format!("file:{}", path.display());
    let out = fdp(&["compose", &spec, "id"]);
    assert_eq!(code(&out), 0);
    let original: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let doc = stdout_json(&out);
    assert_eq!(doc, original);
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

#[test]
fn check_order_reports_equivalence_with_exit_zero() {
    let out = fdp(&["check", "order", "--a", "approx:0.693,0", "--a", "approx:0.693,0"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["verdict"], "equivalent");
    assert!(doc["exact"].as_bool().unwrap());
}

#[test]
fn check_order_reports_crossings_with_witnesses_and_exit_one() {
    let out = fdp(&[
        "check", "order", "--a", "approx:1.3863,0.01", "--b", "approx:0.6931,0.1",
    ]);
    assert_eq!(code(&out), 1);
    let doc = stdout_json(&out);
    assert_eq!(doc["verdict"], "crossing");
    assert!(doc["witnesses"].as_array().unwrap().len() >= 2);
}

#[test]
fn check_order_compares_analytic_curves() {
    let out = fdp(&["check", "order", "--a", "gdp:1", "--b", "gdp:1.5"]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["verdict"], "first_within_second");
}

#[test]
fn check_order_needs_exactly_two_curves() {
    let out = fdp(&["check", "order", "--a", "id"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn check_well_ordered_accepts_pure_delta_families() {
    let out = fdp(&[
        "check", "well-ordered", "--family", "delta:0.05", "delta:0.1", "--depth", "3",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!(doc["ordered"].as_bool().unwrap());
    assert!(doc["crossing_pair"].is_null());
}

#[test]
fn check_well_ordered_finds_depth_two_crossings() {
    let out = fdp(&[
        "check", "well-ordered", "--family", "approx:1.0986,0", "approx:0.6931,0", "--depth", "2",
    ]);
    assert_eq!(code(&out), 1);
    let doc = stdout_json(&out);
    assert!(!doc["ordered"].as_bool().unwrap());
    assert!(doc["crossing_pair"].is_array());
    assert!(!doc["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn check_commutes_holds_for_comparable_families() {
    let out = fdp(&[
        "check", "commutes", "--a", "delta:0.05", "--family", "delta:0.05", "delta:0.1",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!(doc["commutes"].as_bool().unwrap());
}

#[test]
fn check_commutes_fails_across_a_crossing_pair() {
    let out = fdp(&[
        "check", "commutes", "--a", "approx:1.3863,0.01", "--family", "approx:1.3863,0.01",
        "approx:0.6931,0.1",
    ]);
    assert_eq!(code(&out), 1);
    let doc = stdout_json(&out);
    assert!(!doc["commutes"].as_bool().unwrap());
    assert!(doc["max_gap"].as_f64().unwrap() > 1e-3);
}

#[test]
fn check_free_rejects_the_corollary_budget_with_witness() {
    let out = fdp(&[
        "check", "free", "--family", "approx:1.386,0.01", "approx:0.693,0.1",
        "--budget-from-corollary", "--k", "2",
    ]);
    assert_eq!(code(&out), 1);
    let doc = stdout_json(&out);
    assert!(!doc["free"].as_bool().unwrap());
    let witnesses = doc["comparison"]["witnesses"].as_array().unwrap();
    assert!(!witnesses.is_empty());
    assert!(witnesses
        .iter()
        .any(|w| w["lhs"].as_f64().unwrap() > w["rhs"].as_f64().unwrap()));
}

#[test]
fn check_free_accepts_pure_delta_families() {
    let out = fdp(&[
        "check", "free", "--family", "delta:0.05", "delta:0.1", "id", "--budget", "delta:0.3",
        "--k", "4",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!(doc["free"].as_bool().unwrap());
    let value = &doc["value"];
    assert!((value["mass_at_infinity"].as_f64().unwrap() - 0.271).abs() < 1e-12);
}

#[test]
fn check_free_maps_guard_trips_to_exit_four() {
    let out = fdp(&[
        "check", "free", "--family", "approx:0.6931,0", "--budget", "delta:0.5", "--k", "70",
    ]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("guard"));
}

#[test]
fn check_free_needs_some_budget() {
    let out = fdp(&["check", "free", "--family", "delta:0.1", "--k", "2"]);
    assert_eq!(code(&out), 2);
}

// ---------------------------------------------------------------------------
// figure
// ---------------------------------------------------------------------------

fn csv_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for line in lines {
        for (i, cell) in line.split(',').enumerate() {
            cols[i].push(cell.parse().unwrap());
        }
    }
    (header, cols)
}

#[test]
fn figure_1a_separates_adaptive_from_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdp(&["figure", "1a", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let (header, cols) = csv_columns(&dir.path().join("figure-1a.csv"));
    assert_eq!(
        header,
        ["alpha", "adaptive", "envelope", "session_11", "session_12"]
    );
    assert_eq!(cols[0].len(), 1001);
    // The adaptive route never sits above the envelope and dips strictly
    // below it somewhere.
    let mut strict = false;
    for i in 0..cols[0].len() {
        assert!(cols[1][i] <= cols[2][i] + 1e-12);
        strict |= cols[1][i] < cols[2][i] - 1e-4;
        // The envelope is the lower hull of the two fixed sessions.
        assert!(cols[2][i] <= cols[3][i].min(cols[4][i]) + 1e-12);
    }
    assert!(strict, "no strict separation found");
    let bundle: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("figure-1a.json")).unwrap())
            .unwrap();
    assert_eq!(bundle["case_id"], 1);
}

#[test]
fn figure_1b_uses_the_second_slope_regime() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdp(&["figure", "1b", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let bundle: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("figure-1b.json")).unwrap())
            .unwrap();
    assert_eq!(bundle["case_id"], 2);
    assert!(bundle["lhs_slope_closed_form"].is_null());
    assert!(bundle["max_gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn figure_2a_is_an_ordered_chain_and_2b_crosses() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fdp(&["figure", "2a", dir.path().to_str().unwrap()])), 0);
    assert_eq!(code(&fdp(&["figure", "2b", dir.path().to_str().unwrap()])), 0);
    let (_, a) = csv_columns(&dir.path().join("figure-2a.csv"));
    // Ordered: the large single stays below the composed pair everywhere.
    for i in 0..a[0].len() {
        assert!(a[1][i] <= a[3][i] + 1e-12);
    }
    let (_, b) = csv_columns(&dir.path().join("figure-2b.csv"));
    // Crossing: the single large mechanism and the composed small pair
    // each dip under the other somewhere.
    let mut single_below = false;
    let mut double_below = false;
    for i in 0..b[0].len() {
        single_below |= b[1][i] < b[3][i] - 1e-9;
        double_below |= b[3][i] < b[1][i] - 1e-9;
    }
    assert!(single_below && double_below);
}

#[test]
fn figure_3a_and_3b_certify_gaussian_budgets() {
    for name in ["3a", "3b"] {
        let dir = tempfile::tempdir().unwrap();
        let out = fdp(&["figure", name, dir.path().to_str().unwrap()]);
        assert_eq!(code(&out), 0, "figure {name} failed");
        let bundle: Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join(format!("figure-{name}.json"))).unwrap(),
        )
        .unwrap();
        assert!(bundle["accept_margin"].as_f64().unwrap() >= 1e-4);
        assert!(bundle["violation_gap"].as_f64().unwrap() >= 1e-4);
        assert!(bundle["tail_chord_ok"].as_bool().unwrap());
        let (header, cols) = csv_columns(&dir.path().join(format!("figure-{name}.csv")));
        assert_eq!(header, ["alpha", "adaptive", "envelope", "budget"]);
        assert_eq!(cols[0].len(), 1001);
    }
}

#[test]
fn figure_outputs_are_byte_deterministic() {
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    for d in [&dir1, &dir2] {
        assert_eq!(code(&fdp(&["figure", "3a", d.path().to_str().unwrap()])), 0);
    }
    for name in ["figure-3a.csv", "figure-3a.json"] {
        let a = fs::read(dir1.path().join(name)).unwrap();
        let b = fs::read(dir2.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn figure_rejects_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdp(&["figure", "9z", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[test]
fn simulate_runs_a_single_accepted_step() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = dir.path().join("strategy.json");
    fs::write(&strategy, "{\"query\": \"approx:0.6931,0\"}").unwrap();
    let out = fdp(&[
        "simulate", strategy.to_str().unwrap(), "--budget", "approx:1.3863,0", "--capacity", "4",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["steps"].as_array().unwrap().len(), 1);
    assert!(doc["steps"][0]["accepted"].as_bool().unwrap());
    assert!(doc["within_budget"].as_bool().unwrap());
    assert!(doc["warning"].is_null());
}

#[test]
fn simulate_reports_adaptive_excess_over_the_corollary_budget() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = dir.path().join("strategy.json");
    fs::write(
        &strategy,
        r#"{
            "query": "approx:1.3862943611198906,0.01",
            "children": [
                {"query": "approx:0.6931471805599453,0.1"},
                {"query": "approx:1.3862943611198906,0.01"},
                null,
                null
            ]
        }"#,
    )
    .unwrap();
    let out = fdp(&[
        "simulate", strategy.to_str().unwrap(),
        "--budget", "approx:2.6193884935525683,0.109",
        "--capacity", "2",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    // Every step clears the filter, yet the realized leakage exceeds the
    // budget at the witness threshold.
    let steps = doc["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 3);
    assert!(steps.iter().all(|s| s["accepted"].as_bool().unwrap()));
    assert!(!doc["within_budget"].as_bool().unwrap());
    let witnesses = doc["verdict"]["witnesses"].as_array().unwrap();
    let excess = witnesses
        .iter()
        .find(|w| w["lhs"].as_f64().unwrap() > w["rhs"].as_f64().unwrap())
        .expect("no excess witness");
    assert!((excess["gap"].as_f64().unwrap() - 0.01782).abs() < 1e-4);
}

#[test]
fn simulate_truncates_deep_strategies_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = dir.path().join("strategy.json");
    fs::write(
        &strategy,
        r#"{"query": "delta:0.1", "children": [
            {"query": "delta:0.1", "children": [{"query": "delta:0.1"}, null, null]},
            null, null
        ]}"#,
    )
    .unwrap();
    let out = fdp(&[
        "simulate", strategy.to_str().unwrap(), "--budget", "delta:0.5", "--capacity", "1",
    ]);
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert!(doc["warning"].as_str().unwrap().contains("capacity"));
    assert_eq!(doc["steps"].as_array().unwrap().len(), 1);
}

#[test]
fn simulate_rejects_malformed_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = dir.path().join("strategy.json");
    fs::write(&strategy, "{}").unwrap();
    let out = fdp(&[
        "simulate", strategy.to_str().unwrap(), "--budget", "delta:0.3", "--capacity", "2",
    ]);
    assert_eq!(code(&out), 2);
    let out = fdp(&["simulate", "/definitely/missing.json", "--budget", "delta:0.3", "--capacity", "2"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_transcripts_round_trip_through_the_serializers() {
    let dir = tempfile::tempdir().unwrap();
    let strategy = dir.path().join("strategy.json");
    let transcript_path = dir.path().join("transcript.json");
    fs::write(&strategy, "{\"query\": \"approx:0.6931,0.05\"}").unwrap();
    let out = fdp(&[
        "simulate", strategy.to_str().unwrap(), "--budget", "approx:1.3863,0.2",
        "--capacity", "3", "--out", transcript_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let doc: Value =
        serde_json::from_str(&fs::read_to_string(&transcript_path).unwrap()).unwrap();
    // The embedded realized PLD is a valid curve document: feeding it back
    // through compose must succeed and reproduce its tradeoff curve.
    let realized = doc["realized"].to_string();
    let spec = format!("json:{realized}");
    let out = fdp(&["compose", &spec, "id"]);
    assert_eq!(code(&out), 0);
    stdout_json(&out);
}
