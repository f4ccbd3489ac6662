//! End-to-end tests of the `frameless` binary: output schemas, determinism,
//! and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn frameless(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frameless"))
        .args(args)
        .env_remove("FRAMELESS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn analyze_emits_expected_json_fields_and_values() {
    let out = stdout(&frameless(&[
        "analyze", "--n", "100", "--beta", "2.5", "--m", "140", "--format", "json",
    ]));
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["n"], 100);
    assert_eq!(json["m"], 140);
    assert_eq!(json["beta"], 2.5);
    assert_eq!(json["approximate"], false);
    // Regression value fixed by the analysis suite, rounded to 12
    // significant digits by the CLI.
    let per = json["per"].as_f64().unwrap();
    assert!((per - 4.40616422767e-2).abs() < 1e-12, "per = {per}");
    let throughput = json["throughput"].as_f64().unwrap();
    assert!((throughput - 0.682813112659).abs() < 1e-11);
    assert!(json["conservation_defect"].as_f64().unwrap() < 1e-9);
    assert_eq!(json["failure_profile"].as_array().unwrap().len(), 101);
    assert_eq!(json["run_spec"]["command"], "analyze");
    assert_eq!(json["run_spec"]["omega"], "binomial");
    assert!(json.get("omega").is_none());
}

#[test]
fn analyze_emit_omega_includes_distribution() {
    let out = stdout(&frameless(&[
        "analyze",
        "--n",
        "10",
        "--beta",
        "2.0",
        "--m",
        "12",
        "--emit-omega",
    ]));
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    let omega = json["omega"].as_array().unwrap();
    assert_eq!(omega.len(), 11);
    let total: f64 = omega.iter().map(|w| w.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn simulate_runs_are_byte_identical() {
    let args = [
        "simulate", "--n", "100", "--beta", "2.5", "--m", "140", "--trials", "10000", "--seed", "7",
    ];
    let first = frameless(&args);
    let second = frameless(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let json: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    assert_eq!(json["trials"], 10000);
    assert_eq!(json["seed"], 7);
    assert!(json["stderr_per"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_csv_has_documented_header_and_row_count() {
    let out = stdout(&frameless(&[
        "sweep", "--n", "100", "--beta", "2.5", "--m-from", "80", "--m-to", "120", "--m-step", "5",
        "--format", "csv",
    ]));
    let mut lines = out.lines();
    let provenance = lines.next().unwrap();
    assert!(provenance.starts_with("# run_spec: "));
    assert_eq!(lines.next().unwrap(), "n,m,m_over_n,beta,per,throughput");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9); // 80, 85, ..., 120
    for row in rows {
        assert_eq!(row.split(',').count(), 6);
        assert!(row.starts_with("100,"));
    }
}

#[test]
fn sweep_two_stage_header_carries_stage_columns() {
    let out = stdout(&frameless(&[
        "sweep", "--n", "20", "--beta1", "2.0", "--beta2", "4.0", "--m-star", "25", "--m-from",
        "20", "--m-to", "30", "--m-step", "5", "--format", "csv",
    ]));
    let header = out.lines().nth(1).unwrap();
    assert_eq!(header, "n,m,m_over_n,beta1,beta2,m_star,per,throughput");
}

#[test]
fn bound_csv_matches_schema() {
    let out = stdout(&frameless(&[
        "bound", "--n", "100", "--beta", "2.5", "--m", "200",
    ]));
    let mut lines = out.lines();
    assert!(lines.next().unwrap().starts_with("# run_spec: "));
    assert_eq!(lines.next().unwrap(), "n,m,beta,exact_bound,exp_bound");
    let row = lines.next().unwrap();
    let exp_bound: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((exp_bound - 6.73794699909e-3).abs() < 1e-12);
}

#[test]
fn output_file_is_written_atomically_and_resolves_env_dir() {
    let dir = std::env::temp_dir().join(format!("frameless-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_frameless"))
        .args([
            "analyze",
            "--n",
            "10",
            "--beta",
            "1.5",
            "--m",
            "12",
            "--output",
            "result.json",
        ])
        .env("FRAMELESS_OUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let written = dir.join("result.json");
    assert!(written.exists());
    assert!(!dir.join("result.tmp").exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&written).unwrap()).unwrap();
    assert_eq!(json["n"], 10);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_oracle_passes_and_writes_table() {
    let dir = std::env::temp_dir().join(format!("frameless-oracle-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let table = dir.join("oracle.csv");
    let out = frameless(&[
        "verify-oracle",
        "--max-n",
        "3",
        "--max-m",
        "4",
        "--output",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("all instances agree within 1e-12"));
    let csv = std::fs::read_to_string(&table).unwrap();
    assert_eq!(
        csv.lines().nth(1).unwrap(),
        "n,m,beta,analysis_per,oracle_per,diff,ok"
    );
    assert!(csv.lines().skip(2).all(|l| l.ends_with(",true")));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn usage_errors_exit_with_code_2() {
    // Missing schedule entirely.
    let out = frameless(&["analyze", "--n", "10", "--m", "5"]);
    assert_eq!(out.status.code(), Some(2));
    // Mixing single and two-stage flags is rejected by the parser.
    let out = frameless(&[
        "analyze", "--n", "10", "--beta", "1.0", "--beta1", "1.0", "--beta2", "2.0", "--m-star",
        "3", "--m", "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Out-of-range beta is a config error reported as a machine-readable
    // record.
    let out = frameless(&["analyze", "--n", "10", "--beta", "11.0", "--m", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr is a JSON record");
    assert_eq!(err["error"]["kind"], "invalid-config");
}

#[test]
fn optimize_peak_smoke_run() {
    // Tiny n keeps the grid small; checks the JSON shape, not Table I.
    let out = stdout(&frameless(&[
        "optimize-peak",
        "--n",
        "10",
        "--beta-from",
        "2.0",
        "--beta-to",
        "2.4",
    ]));
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["n"], 10);
    let t_max = json["t_max"].as_f64().unwrap();
    assert!(t_max > 0.0 && t_max < 1.0);
    assert!(json["worst_conservation_defect"].as_f64().unwrap() < 1e-9);
}

#[test]
fn optimize_floor_smoke_run_with_trace() {
    let dir = std::env::temp_dir().join(format!("frameless-floor-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let trace = dir.join("trace.csv");
    let out = stdout(&frameless(&[
        "optimize-floor",
        "--n",
        "10",
        "--beta1",
        "2.2",
        "--m-star",
        "13",
        "--beta2-from",
        "2.5",
        "--beta2-to",
        "4.0",
        "--trace",
        trace.to_str().unwrap(),
    ]));
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["target_m"], 20);
    let beta2 = json["beta2"].as_f64().unwrap();
    assert!((2.5..=4.0).contains(&beta2));
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "beta2,per,throughput");
    assert!(csv.lines().count() > 10);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_with_overlay_adds_simulation_columns() {
    let out = stdout(&frameless(&[
        "sweep", "--n", "20", "--beta", "2.0", "--m-from", "20", "--m-to", "24", "--m-step", "2",
        "--trials", "500", "--seed", "3", "--format", "csv",
    ]));
    let header = out.lines().nth(1).unwrap();
    assert_eq!(
        header,
        "n,m,m_over_n,beta,per,throughput,sim_per,sim_throughput,stderr_per,stderr_throughput,trials,seed"
    );
    // Deterministic given the seed.
    let again = stdout(&frameless(&[
        "sweep", "--n", "20", "--beta", "2.0", "--m-from", "20", "--m-to", "24", "--m-step", "2",
        "--trials", "500", "--seed", "3", "--format", "csv",
    ]));
    assert_eq!(out, again);
}

#[test]
fn relative_output_without_env_lands_in_cwd() {
    let dir = std::env::temp_dir().join(format!("frameless-cwd-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_frameless"))
        .args([
            "bound", "--n", "10", "--beta", "1.0", "--m", "10", "--output", "b.csv",
        ])
        .env_remove("FRAMELESS_OUT_DIR")
        .current_dir(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(Path::new(&dir.join("b.csv")).exists());
    std::fs::remove_dir_all(&dir).ok();
}
