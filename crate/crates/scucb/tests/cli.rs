//! End-to-end checks of the command-line interface: output schemas, flag
//! overrides, the output-directory environment variable, and exit codes.

use std::process::Command;

fn scucb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scucb"))
}

fn stdout_of(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gaps_reports_the_exhaustive_optimum() {
    let text = stdout_of(scucb().args(["gaps", "--means", "0.9,0.8,0.3", "--action-size", "2"]));
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((report["opt"].as_f64().unwrap() - 1.7).abs() < 1e-12);
    assert_eq!(report["optimal_subset"], serde_json::json!([0, 1]));
    assert!((report["delta_min"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((report["delta_max"].as_f64().unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn bound_evaluators_print_the_closed_forms() {
    let text = stdout_of(scucb().args([
        "bound",
        "regret",
        "--arms",
        "10",
        "--delta-max",
        "0.6",
        "--delta-min",
        "0.5",
        "--bmax",
        "10",
        "--horizon",
        "5000",
        "--smoothness-slope",
        "2",
    ]));
    let value: f64 = text.trim().parse().unwrap();
    assert!((value - 6851.642487057932).abs() < 1e-6);

    let text = stdout_of(scucb().args([
        "bound", "budget", "--delta", "0.5", "--pulls", "10000", "--eta", "0.1",
    ]));
    let value: f64 = text.trim().parse().unwrap();
    assert!((value - 4321.385957558489).abs() < 1e-6);
}

#[test]
fn collude_prints_a_feasible_plan() {
    let text = stdout_of(scucb().args([
        "collude",
        "--budgets",
        "100",
        "--gaps",
        "0.5",
        "--y-cap",
        "100",
    ]));
    let solution: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(solution["objective"].as_f64().unwrap() > 0.0);
    assert_eq!(solution["permutation"], serde_json::json!([0]));
}

#[test]
fn verify_lemma1_reports_rates_against_the_ceiling() {
    let text = stdout_of(scucb().args([
        "verify-lemma1",
        "--arms",
        "3",
        "--horizon",
        "500",
        "--replications",
        "5",
        "--checkpoints",
        "100,500",
    ]));
    let rows: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row["empirical_failure_rate"].as_f64().unwrap() >= 0.0);
        assert!(row["ceiling"].as_f64().unwrap() <= 1.0);
    }
}

#[test]
fn run_honors_flag_overrides_and_the_output_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(
        &config_path,
        r#"
num_arms = 4
action_size = 2
horizon = 1000
b_max = 5.0
gamma = 0.2
seeds = [0, 1, 2]
policies = ["scucb", "cucb"]
"#,
    )
    .unwrap();

    let out_dir = dir.path().join("results");
    let output = scucb()
        .env("SCUCB_OUTPUT_DIR", &out_dir)
        .args([
            "run",
            "--config",
            config_path.to_str().unwrap(),
            "--horizon",
            "200",
            "--seeds",
            "7",
            "--stride",
            "50",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());

    let csv = std::fs::read_dir(&out_dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.extension().is_some_and(|x| x == "csv"))
        .expect("csv landed in $SCUCB_OUTPUT_DIR");
    let text = std::fs::read_to_string(csv).unwrap();
    // overrides: 1 seed, horizon 200, stride 50 -> 4 rows per policy
    assert_eq!(text.lines().count(), 1 + 2 * 4);
    assert!(text.lines().skip(1).all(|l| l.contains(",7,")));
}

#[test]
fn sweep_writes_per_cell_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(
        &config_path,
        r#"
num_arms = 4
action_size = 2
horizon = 120
b_max = 5.0
gamma = 0.2
seeds = [0, 1]
policies = ["scucb"]
"#,
    )
    .unwrap();
    let text = stdout_of(scucb().args([
        "sweep",
        "--config",
        config_path.to_str().unwrap(),
        "--axis",
        "bmax=0,5",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]));
    assert!(text.contains("bmax=0"));
    assert!(text.contains("bmax=5"));
    let json = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| p.extension().is_some_and(|x| x == "json"))
        .expect("sweep wrote a json summary");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(summary["cells"].as_array().unwrap().len(), 2);
}

#[test]
fn invalid_inputs_exit_nonzero() {
    // unparseable axis
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.toml");
    std::fs::write(
        &config_path,
        "num_arms = 4\naction_size = 2\nhorizon = 100\nb_max = 1.0\ngamma = 0.2\nseeds = [0]\n",
    )
    .unwrap();
    let out = scucb()
        .args([
            "sweep",
            "--config",
            config_path.to_str().unwrap(),
            "--axis",
            "nonsense=1,2",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());

    // invalid config (horizon below the initialization length)
    std::fs::write(
        &config_path,
        "num_arms = 40\naction_size = 2\nhorizon = 10\nb_max = 1.0\ngamma = 0.2\nseeds = [0]\n",
    )
    .unwrap();
    let out = scucb()
        .args(["run", "--config", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    // capability error from the solver
    let out = scucb()
        .args([
            "collude",
            "--budgets",
            "1,1,1,1,1,1,1",
            "--gaps",
            "0.1,0.1,0.1,0.1,0.1,0.1,0.1",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
