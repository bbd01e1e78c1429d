use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;
use teamlq_cli::schema::{parse_problem, write_problem};
use teamlq_cli::{run_command, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

/// Runs in-process and returns `(exit code, stdout)`.
fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("teamlq").chain(args.iter().copied());
    let code = run_command(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn machine(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.extend(["--format", "machine"]);
    let (code, text) = run(&full);
    (code, serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}")))
}

#[test]
fn scalar_power_gain_is_one_half() {
    let (code, r) = machine(&["solve-stochastic", &fixture("scalar_power.json")]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(r["status"], "optimal");
    let k = r["result"]["K"][0][0][0].as_f64().unwrap();
    assert!((k - 0.5).abs() <= 1e-6, "{k}");
    assert!((r["result"]["primal_value"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert_eq!(r["tool"], "teamlq");
    assert!(r["options"]["tol"].as_f64().unwrap() > 0.0);
}

#[test]
fn infeasible_problem_exits_two() {
    let (code, r) = machine(&["solve-stochastic", &fixture("infeasible.json")]);
    assert_eq!(code, EXIT_INFEASIBLE);
    assert_eq!(r["status"], "infeasible");
}

#[test]
fn verify_accepts_the_solver_report_and_rejects_a_bad_gain() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let report = report.to_str().unwrap();
    let problem = fixture("two_player.json");
    let (code, _) = run(&["solve-stochastic", &problem, "--format", "machine", "--out", report]);
    assert_eq!(code, EXIT_OK);
    let (code, r) = machine(&["verify", &problem, "--gain", report, "--samples", "20000"]);
    assert_eq!(code, EXIT_OK, "{r}");
    assert_eq!(r["result"]["violated"], serde_json::json!([]));
    assert_eq!(r["result"]["constraints"][0]["monte_carlo_agrees"], true);

    let (code, r) = machine(&["verify", &fixture("scalar_power.json"), "--gain", &fixture("mismatched_gain.json")]);
    assert_eq!(code, EXIT_INFEASIBLE);
    assert_eq!(r["status"], "violated");
    assert_eq!(r["result"]["violated"], serde_json::json!([0]));
}

#[test]
fn malformed_documents_exit_three() {
    assert_eq!(run(&["solve-stochastic", &fixture("ragged.json")]).0, EXIT_INPUT);
    assert_eq!(run(&["reduce-dynamic", &fixture("self_delay.json")]).0, EXIT_INPUT);
    assert_eq!(run(&["solve-stochastic", "/nonexistent/problem.json"]).0, EXIT_INPUT);
    assert_eq!(run(&["solve-minimax", &fixture("scalar_power.json")]).0, EXIT_INPUT);
    assert_eq!(run(&["no-such-command"]).0, EXIT_INPUT);
    assert_eq!(run(&["solve-stochastic", &fixture("scalar_power.json"), "--threads", "0"]).0, EXIT_INPUT);
}

#[test]
fn error_messages_name_the_offending_field() {
    let err = |name: &str| parse_problem(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap_err().to_string();
    assert!(err("ragged.json").contains("objective.Q[1]"), "{}", err("ragged.json"));
    assert!(err("self_delay.json").contains("self-delay must be 0"), "{}", err("self_delay.json"));
}

#[test]
fn minimax_and_game_value() {
    let (code, r) = machine(&["solve-minimax", &fixture("minimax_feasible.json")]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(r["status"], "feasible");
    assert!(r["result"]["phi"].as_f64().unwrap() <= 0.0);
    for k in r["result"]["K"].as_array().unwrap() {
        let k = k[0][0].as_f64().unwrap();
        assert!((0.5..=0.9).contains(&k), "{k}");
    }

    let (code, r) = machine(&["game-value", &fixture("game_value.json"), "--tol", "1e-7"]);
    assert_eq!(code, EXIT_OK);
    let gamma = r["result"]["gamma_star"].as_f64().unwrap();
    assert!((gamma - 0.25).abs() <= 1e-5, "{gamma}");
}

#[test]
fn dynamic_reduction_emits_a_solvable_static_problem() {
    let dir = tempfile::tempdir().unwrap();
    let lifted = dir.path().join("lifted.json");
    let lifted = lifted.to_str().unwrap();
    let problem = fixture("dynamic_chain.json");
    let (code, _) = run(&["reduce-dynamic", &problem, "--format", "machine", "--out", lifted]);
    assert_eq!(code, EXIT_OK);
    let (code, static_report) = machine(&["solve-stochastic", lifted]);
    assert_eq!(code, EXIT_OK);
    let (code, dynamic_report) = machine(&["solve-dynamic", &problem, "--samples", "200000"]);
    assert_eq!(code, EXIT_OK);
    let a = static_report["result"]["primal_value"].as_f64().unwrap();
    let b = &dynamic_report["result"];
    assert!((a - b["primal_value"].as_f64().unwrap()).abs() <= 1e-9 * a);
    let mean = b["rollout"]["mean"].as_f64().unwrap();
    let se = b["rollout"]["std_error"].as_f64().unwrap();
    assert!((mean - a).abs() <= 4.0 * se, "{mean} ± {se} vs {a}");
    assert_eq!(b["gains"].as_array().unwrap().len(), 6);

    let (code, text) = run(&["reduce-dynamic", &fixture("dynamic_one_way.json")]);
    assert_eq!(code, EXIT_OK);
    assert!(text.contains("result.players[5].node"), "{text}");
}

#[test]
fn oracle_search_reports_the_linear_comparison() {
    let (code, r) = machine(&["oracle-search", &fixture("two_player.json"), "--samples", "20000", "--bins", "9"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(r["result"]["tables"].as_array().unwrap().len(), 2);
    assert_eq!(r["result"]["tables"][0]["values"].as_array().unwrap().len(), 9);
    assert_eq!(r["options"]["bins"], 9);
}

#[test]
fn fixtures_round_trip() {
    for name in [
        "scalar_power.json",
        "two_player.json",
        "infeasible.json",
        "minimax_feasible.json",
        "game_value.json",
        "dynamic_chain.json",
        "dynamic_one_way.json",
    ] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let p = parse_problem(&text).unwrap();
        let written = write_problem(&p);
        assert_eq!(parse_problem(&written).unwrap(), p, "{name}");
        let a: Value = serde_json::from_str(&text).unwrap();
        let b: Value = serde_json::from_str(&written).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

fn without_wall_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_s");
    v
}

#[test]
fn reports_are_deterministic_across_runs_and_thread_counts() {
    let problem = fixture("two_player.json");
    let base = ["oracle-search", problem.as_str(), "--samples", "30000", "--seed", "5"];
    let (_, a) = machine(&base);
    let (_, b) = machine(&base);
    assert_eq!(without_wall_time(a.clone()), without_wall_time(b));
    let mut one = base.to_vec();
    one.extend(["--threads", "1"]);
    let (_, c) = machine(&one);
    let mut four = base.to_vec();
    four.extend(["--threads", "4"]);
    let (_, d) = machine(&four);
    assert_eq!(a["result"], c["result"]);
    assert_eq!(c["result"], d["result"]);
}

#[test]
fn binary_exit_codes_and_logging() {
    let bin = env!("CARGO_BIN_EXE_teamlq");
    let ok = Command::new(bin)
        .args(["solve-stochastic", &fixture("scalar_power.json")])
        .env("TEAMLQ_LOG", "debug")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let stdout = String::from_utf8(ok.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("status") && l.ends_with("optimal")), "{stdout}");
    let bad = Command::new(bin).args(["solve-stochastic", &fixture("ragged.json")]).output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_INPUT));
    assert!(String::from_utf8(bad.stderr).unwrap().contains("objective.Q[1]"));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(EXIT_OK));
}
