//! End-to-end command-line behavior: exit codes, emitted CSV content, strict
//! mode, and the bundled scenario files.

use fademac::cli_io::{parse_scenario, run_command, serialize_scenario};

use std::fs;
use std::path::PathBuf;

fn scenario_path(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn read_csv(path: &PathBuf) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|line| line.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn bundled_scenarios_parse_and_round_trip() {
    for name in [
        "sec5a.scenario",
        "fig1.scenario",
        "fig2.scenario",
        "fig3.scenario",
        "fig3_nofading.scenario",
    ] {
        let text = fs::read_to_string(scenario_path(name)).unwrap();
        let cfg = parse_scenario(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let reparsed = parse_scenario(&serialize_scenario(&cfg)).unwrap();
        assert_eq!(cfg, reparsed, "{name} does not round-trip");
    }
}

#[test]
fn uniform_power_feasibility_is_infeasible_with_negative_sum_margin() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("upa.csv");
    let code = run_command([
        "feasibility",
        &scenario_path("sec5a.scenario"),
        "--policy",
        "upa",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rows = read_csv(&out);
    assert_eq!(rows[0], ["constraint", "lhs", "rhs", "margin", "verdict"]);
    let sum_row = rows.iter().find(|r| r[0] == "sum").unwrap();
    assert_eq!(sum_row[4], "infeasible");
    assert!(
        sum_row[3].parse::<f64>().unwrap() < 0.0,
        "sum margin should be negative: {sum_row:?}"
    );
}

#[test]
fn strict_mode_exits_one_on_infeasible() {
    let code = run_command([
        "feasibility",
        &scenario_path("sec5a.scenario"),
        "--policy",
        "upa",
        "--strict",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn optimal_policy_feasibility_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("optimal.csv");
    let code = run_command([
        "feasibility",
        &scenario_path("sec5a.scenario"),
        "--strict",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rows = read_csv(&out);
    assert!(rows[1..].iter().all(|r| r[4] == "feasible"), "{rows:?}");
}

#[test]
fn sweep_over_crossover_emits_a_nonincreasing_sum_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let code = run_command([
        "sweep",
        &scenario_path("fig2.scenario"),
        "--axis",
        "p",
        "--points",
        "0,0.05,0.1,0.2,0.3,0.4,0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rows = read_csv(&out);
    assert_eq!(
        rows[0],
        [
            "axis_value",
            "r1_bound",
            "r2_bound",
            "sum_bound",
            "d1",
            "d2",
            "verdict",
            "kkt_residual",
            "converged"
        ]
    );
    let sums: Vec<f64> = rows[1..]
        .iter()
        .map(|r| r[3].parse::<f64>().unwrap())
        .collect();
    assert_eq!(sums.len(), 7);
    for pair in sums.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-9, "sum column rose: {sums:?}");
    }
    assert!(rows[1..].iter().all(|r| r[8] == "true"));
}

#[test]
fn distortion_emits_the_selected_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nofade.csv");
    let code = run_command([
        "distortion",
        &scenario_path("fig3_nofading.scenario"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rows = read_csv(&out);
    assert_eq!(
        rows[0],
        ["r1", "r2", "d1", "d2", "d_sum", "verdict", "rho_tilde"]
    );
    assert_eq!(rows.len(), 2);
    let d_sum: f64 = rows[1][4].parse().unwrap();
    assert!(d_sum > 0.0 && d_sum < 2.0);
    assert_ne!(rows[1][5], "infeasible");
}

#[test]
fn validate_passes_on_the_reference_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("validate.csv");
    let code = run_command([
        "validate",
        &scenario_path("fig3.scenario"),
        "--samples",
        "200000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "a Monte Carlo comparison exceeded 3 sigma");
    let rows = read_csv(&out);
    assert_eq!(
        rows[0],
        [
            "quantity",
            "closed_form",
            "mc_estimate",
            "std_error",
            "z_score",
            "pass"
        ]
    );
    // Three rate rows plus two quantizer-distortion rows for the Gaussian source.
    assert_eq!(rows.len(), 6);
    assert!(rows[1..].iter().all(|r| r[5] == "true"));
}

#[test]
fn tdma_needs_perfect_transmitter_state_information() {
    let code = run_command(["rates", &scenario_path("fig1.scenario"), "--policy", "tdma"]);
    assert_eq!(code, 2);
    let code = run_command([
        "rates",
        &scenario_path("sec5a.scenario"),
        "--policy",
        "tdma",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn feasibility_without_a_source_is_an_input_error() {
    let code = run_command(["feasibility", &scenario_path("fig2.scenario")]);
    assert_eq!(code, 2);
}

#[test]
fn distortion_needs_a_gaussian_source() {
    let code = run_command(["distortion", &scenario_path("sec5a.scenario")]);
    assert_eq!(code, 2);
}

#[test]
fn malformed_scenarios_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_probs = dir.path().join("bad_probs.scenario");
    fs::write(
        &bad_probs,
        fs::read_to_string(scenario_path("sec5a.scenario"))
            .unwrap()
            .replace("fade_probs_1 = 0.5 0.5", "fade_probs_1 = 0.5 0.4"),
    )
    .unwrap();
    assert_eq!(run_command(["rates", bad_probs.to_str().unwrap()]), 2);

    let bad_crossover = dir.path().join("bad_crossover.scenario");
    fs::write(
        &bad_crossover,
        fs::read_to_string(scenario_path("sec5a.scenario"))
            .unwrap()
            .replace("csit = perfect", "csit = bsc 0.7"),
    )
    .unwrap();
    assert_eq!(run_command(["rates", bad_crossover.to_str().unwrap()]), 2);
}

#[test]
fn rho_max_scenarios_tune_the_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let tuned = dir.path().join("tuned.scenario");
    fs::write(
        &tuned,
        fs::read_to_string(scenario_path("sec5a.scenario"))
            .unwrap()
            .replace("rho_tilde = 0.3", "rho_max = 0.3"),
    )
    .unwrap();
    let out = dir.path().join("tuned.csv");
    let code = run_command([
        "feasibility",
        tuned.to_str().unwrap(),
        "--strict",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rows = read_csv(&out);
    assert!(rows[1..].iter().all(|r| r[4] == "feasible"), "{rows:?}");
}
