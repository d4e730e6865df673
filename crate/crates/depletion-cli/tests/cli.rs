//! End-to-end checks of the batch front-end: subcommand behavior, exit
//! codes, artifact reproducibility and config plumbing.

use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_depletion")
}

fn run(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn graphs_reports_known_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["graphs", "--n", "4", "--out", "g"], tmp.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("n=4: 38 connected, 10 two-connected"));
    let csv = std::fs::read_to_string(tmp.path().join("g/graphs.csv")).unwrap();
    assert!(csv.contains("4,38,10"));
    assert!(csv.starts_with("# depletion"));
    assert!(csv.contains("# config = {"));
}

#[test]
fn artifacts_are_bit_identical_across_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let out = run(
            &[
                "beta", "--d", "1", "--n-max", "2", "--samples", "20000", "--seed", "5", "--out",
                dir,
            ],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    for name in ["beta.csv", "beta.json"] {
        let a = std::fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn invalid_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    std::fs::write(&config, "[model]\nd = 7\n").unwrap();
    let out = run(
        &["graphs", "--n", "3", "--config", config.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    // Single-line machine-parsable error.
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error: invalid-config:"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("typo.toml");
    std::fs::write(&config, "[modle]\nd = 1\n").unwrap();
    let out = run(
        &["graphs", "--n", "3", "--config", config.to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn resource_limits_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["graphs", "--n", "9"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error: resource-limit:"));
}

#[test]
fn config_file_drives_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "[model]\nr_small = 0.2\n\n[mc]\nsamples = 20000\nseed = 9\nshards = 16\n",
    )
    .unwrap();
    let out = run(
        &[
            "beta",
            "--d",
            "1",
            "--n-max",
            "1",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "o",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    // beta_1 = -|B_2r| = -0.8 exactly for r = 0.2.
    assert!(stdout.contains("-0.8"), "{stdout}");
    let json = std::fs::read_to_string(tmp.path().join("o/beta.json")).unwrap();
    assert!(json.contains("\"r_small\": 0.2"));
    assert!(json.contains("\"toolkit_version\""));
}

#[test]
fn verify_tree_graph_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["verify", "--suite", "tree-graph", "--samples", "20000", "--out", "v"],
        tmp.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("suite tree-graph: ok"));
    assert!(tmp.path().join("v/verify.json").exists());
}

#[test]
fn free_energy_finite_mode_single_point() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "[model]\nmode = \"finite\"\nn_small = 2\nn_big = 1\nbox_len = 320.0\n\n[mc]\nsamples = 20000\nseed = 4\nshards = 16\n",
    )
    .unwrap();
    let out = run(
        &[
            "free-energy",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "fe",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("fe/free_energy.csv")).unwrap();
    // Two comment lines, one header, one data row.
    assert_eq!(csv.lines().count(), 4);
    let data = csv.lines().last().unwrap();
    assert!(data.starts_with("0.00625,0.003125,true,"), "{data}");
}

#[test]
fn free_energy_sweep_writes_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "[mc]\nsamples = 20000\nseed = 3\nshards = 16\n\n[grid]\nrho_small_min = 0.001\nrho_small_max = 0.002\nrho_small_points = 2\nrho_big_min = 0.001\nrho_big_max = 0.002\nrho_big_points = 2\n",
    )
    .unwrap();
    let out = run(
        &[
            "free-energy",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "fe",
        ],
        tmp.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("fe/free_energy.csv")).unwrap();
    // Header plus four grid points plus two comment lines.
    assert_eq!(csv.lines().count(), 7);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("0 ordering violations"));
}
