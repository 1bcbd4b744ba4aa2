//! End-to-end tests of the `mvoprobit` binary: pipeline round trips,
//! deterministic outputs, and exit-code contracts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mvoprobit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

/// Two-equation config with a simulate block; small n keeps fits quick.
fn pipeline_config(dir: &Path) -> String {
    format!(
        r#"{{
  "model": {{"equations": [
    {{"name": "a", "n_stages": 3, "covariates": ["x1", "x2"], "outcome": "ya"}},
    {{"name": "b", "n_stages": 3, "covariates": ["x1"], "outcome": "yb"}}
  ]}},
  "input": "{dir}/sim.data.csv",
  "output": "{dir}/sim",
  "seed": 12,
  "simulate": {{
    "n": 700,
    "parameters": {{
      "beta": [[0.7, -0.4], [0.5]],
      "thresholds": [[-0.5, 0.6], [-0.2, 0.8]],
      "correlations": [0.35]
    }},
    "covariates": [
      {{"name": "x1", "dist": {{"type": "std_normal"}}}},
      {{"name": "x2", "dist": {{"type": "uniform", "low": -1.0, "high": 1.0}}}}
    ]
  }}
}}"#,
        dir = dir.display()
    )
}

#[test]
fn simulate_fit_pipeline_recovers_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = dir.join("run.json");
    write(&cfg, &pipeline_config(dir));

    let sim = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let first_csv = std::fs::read(dir.join("sim.data.csv")).unwrap();

    // Identical config + seed reproduce the CSV byte for byte.
    let sim2 = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(sim2.status.success());
    let second_csv = std::fs::read(dir.join("sim.data.csv")).unwrap();
    assert_eq!(first_csv, second_csv);

    let fit = run(&["fit", "--config", cfg.to_str().unwrap()]);
    assert!(fit.status.success(), "{}", String::from_utf8_lossy(&fit.stderr));
    let stdout = String::from_utf8_lossy(&fit.stdout);
    assert!(stdout.contains("rho("), "summary should list correlations: {stdout}");
    let fit_json = std::fs::read_to_string(dir.join("sim.fit.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&fit_json).unwrap();
    assert_eq!(parsed["converged"], serde_json::Value::Bool(true));
    // Recovered correlation is in the neighborhood of the truth.
    let rho = parsed["params"]["correlations"][0].as_f64().unwrap();
    assert!((rho - 0.35).abs() < 0.12, "rho = {rho}");

    // Fitting again from the echoed effective config reproduces the result
    // byte for byte (idempotent pipeline).
    let echoed = dir.join("sim.config.json");
    assert!(echoed.exists());
    let first_fit = std::fs::read(dir.join("sim.fit.json")).unwrap();
    let refit = run(&["fit", "--config", echoed.to_str().unwrap()]);
    assert!(refit.status.success());
    let second_fit = std::fs::read(dir.join("sim.fit.json")).unwrap();
    assert_eq!(first_fit, second_fit);

    // Summary artifact exists and matches stdout.
    let summary = std::fs::read_to_string(dir.join("sim.summary.txt")).unwrap();
    assert_eq!(summary, stdout);
}

#[test]
fn strict_mode_flags_non_convergence_with_exit_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg_text = pipeline_config(dir).replace(
        "\"seed\": 12,",
        "\"seed\": 12,\n  \"fit\": {\"max_iterations\": 1, \"grad_tolerance\": 1e-12, \"rel_ll_tolerance\": 1e-15, \"compute_std_errors\": false},",
    );
    let cfg = dir.join("run.json");
    write(&cfg, &cfg_text);
    assert!(run(&["simulate", "--config", cfg.to_str().unwrap()]).status.success());

    let lax = run(&["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(lax.status.code(), Some(0), "non-strict fits exit 0");
    let fit_json = std::fs::read_to_string(dir.join("sim.fit.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&fit_json).unwrap();
    assert_eq!(parsed["converged"], serde_json::Value::Bool(false));

    let strict = run(&["fit", "--config", cfg.to_str().unwrap(), "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn config_errors_exit_one_and_name_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    write(
        &cfg,
        r#"{"model": {"equations": [{"name": "a", "n_stages": 3, "covariates": [], "outcome": "y"}]}, "mystery": 1}"#,
    );
    let out = run(&["fit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mystery"), "{stderr}");
}

#[test]
fn mvnprob_prints_the_independence_orthant() {
    let out = run(&["mvnprob", "--upper", "0,0,0", "--rho", "0,0,0"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.125");

    let bad = run(&["mvnprob", "--upper", "0,0", "--rho", "0,0,0"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn stage_command_routes_walk_cycle_answers() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("answers.csv");
    write(
        &input,
        "behavior_status,realistic,expect_near_future,duration\n\
         never_contemplated,no,,\n\
         never_contemplated,yes,,\n\
         contemplated,,no,\n\
         contemplated,,yes,\n\
         uses_mode,,,under_one_year\n\
         uses_mode,,,one_year_or_more\n",
    );
    let output = tmp.path().join("stages.csv");
    let out = run(&[
        "stage",
        "--input",
        input.to_str().unwrap(),
        "--instrument",
        "walk_cycle",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = std::fs::read_to_string(&output).unwrap();
    let lines: Vec<&str> = written.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[0].ends_with(",label,stage"));
    assert!(lines[1].ends_with(",PC1,0"));
    assert!(lines[2].ends_with(",PC2,0"));
    assert!(lines[3].ends_with(",C,1"));
    assert!(lines[4].ends_with(",P,2"));
    assert!(lines[5].ends_with(",A,3"));
    assert!(lines[6].ends_with(",M,3"));

    // Incomplete answers produce a row-addressed error.
    write(
        &input,
        "behavior_status,realistic,expect_near_future,duration\ncontemplated,,,\n",
    );
    let out = run(&[
        "stage",
        "--input",
        input.to_str().unwrap(),
        "--instrument",
        "walk_cycle",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));
}

#[test]
fn stage_command_routes_bikeshare_answers_with_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("answers.csv");
    write(
        &input,
        "weekly_use_expected,would_contemplate,accessible,likelihood_6mo\n\
         yes,,,\n\
         no,no,,\n\
         no,yes,no,1\n\
         no,yes,yes,2\n\
         no,yes,no,4\n\
         no,yes,yes,5\n",
    );
    let output = tmp.path().join("stages.csv");
    let out = run(&[
        "stage",
        "--input",
        input.to_str().unwrap(),
        "--instrument",
        "bikeshare",
        "--merge",
        "bikeshare_3_merge_c_p",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = std::fs::read_to_string(&output).unwrap();
    let lines: Vec<&str> = written.lines().collect();
    assert!(lines[1].ends_with(",AM,2"));
    assert!(lines[2].ends_with(",PC,0"));
    assert!(lines[3].ends_with(",C1,1"));
    assert!(lines[4].ends_with(",C2,1"));
    assert!(lines[5].ends_with(",P1,1"));
    assert!(lines[6].ends_with(",P2,1"));
}

#[test]
fn sei_command_appends_index_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("diary.csv");
    // Two modes at the same positive frequency give SEI = 1, HHI = 0.5.
    write(&input, "id,walk,cycle\n1,1–2,1–2\n2,7+,0\n");
    let output = tmp.path().join("diary_sei.csv");
    let out = run(&[
        "sei",
        "--input",
        input.to_str().unwrap(),
        "--modes",
        "walk,cycle",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let written = std::fs::read_to_string(&output).unwrap();
    let lines: Vec<&str> = written.lines().collect();
    assert_eq!(lines[0], "id,walk,cycle,sei,hhi");
    assert!(lines[1].ends_with(",1,0.5"), "{}", lines[1]);
    // Single active mode out of two: SEI = 0.5, HHI = 1.
    assert!(lines[2].ends_with(",0.5,1"), "{}", lines[2]);

    // Unknown band that is not numeric errors with row/column.
    write(&input, "id,walk,cycle\n1,lots,0\n");
    let out = run(&[
        "sei",
        "--input",
        input.to_str().unwrap(),
        "--modes",
        "walk,cycle",
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 1") && stderr.contains("walk"), "{stderr}");
}

#[test]
fn contour_command_emits_long_csv_and_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = dir.join("contour.json");
    write(
        &cfg,
        &format!(
            r#"{{
  "model": {{"equations": [
    {{"name": "a", "n_stages": 3, "covariates": ["u", "v"], "outcome": "ya"}}
  ]}},
  "output": "{dir}/c",
  "contour": {{
    "var_a": "u", "var_b": "v",
    "range_a": [-2.0, 2.0], "range_b": [-2.0, 2.0],
    "resolution": 5,
    "svg": true,
    "parameters": {{
      "beta": [[1.0, 0.5]],
      "thresholds": [[-0.8, 0.8]],
      "correlations": []
    }}
  }}
}}"#,
            dir = dir.display()
        ),
    );
    let out = run(&["contour", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("c.contour.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "var_a,var_b,equation,stage,probability,is_argmax");
    // 5x5 nodes x 3 stages + header.
    assert_eq!(lines.len(), 1 + 5 * 5 * 3);
    // Each node flags exactly one argmax row.
    let argmax_rows = lines[1..]
        .iter()
        .filter(|l| l.ends_with(",1"))
        .count();
    assert_eq!(argmax_rows, 25);
    let svg = std::fs::read_to_string(dir.join("c.a.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.ends_with("</svg>"));

    // Determinism: re-running reproduces the CSV byte for byte.
    let before = std::fs::read(dir.join("c.contour.csv")).unwrap();
    assert!(run(&["contour", "--config", cfg.to_str().unwrap()]).status.success());
    let after = std::fs::read(dir.join("c.contour.csv")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn predict_command_writes_per_row_probabilities() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = dir.join("run.json");
    write(&cfg, &pipeline_config(dir));
    assert!(run(&["simulate", "--config", cfg.to_str().unwrap()]).status.success());
    assert!(run(&["fit", "--config", cfg.to_str().unwrap()]).status.success());

    let out = run(&[
        "predict",
        "--config",
        cfg.to_str().unwrap(),
        "--params",
        dir.join("sim.fit.json").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sim.predictions.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "a_p0,a_p1,a_p2,a_argmax,b_p0,b_p1,b_p2,b_argmax");
    assert_eq!(lines.len(), 1 + 700);
    // Probabilities per row sum to one per equation.
    let fields: Vec<f64> = lines[1]
        .split(',')
        .map(|v| v.parse::<f64>().unwrap())
        .collect();
    assert!((fields[0] + fields[1] + fields[2] - 1.0).abs() < 1e-9);
}
