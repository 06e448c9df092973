//! End-to-end tests of the `ramsey` binary: exit codes, emitted files,
//! and byte determinism of the CSV outputs.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ramsey"))
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ramsey-cli-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn solve_default_scenario_emits_files_and_respects_fraction_bound() {
    let out = temp_dir("solve");
    let status = bin()
        .args(["solve", "--config"])
        .arg(scenario_path("default.cfg"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for f in ["trajectory.csv", "diagnostics.csv", "manifest.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    // max_fraction column stays below (eps/mu)^n = 2
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    for line in diag.lines().skip(1) {
        let frac: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(frac <= 2.0, "fraction {frac} above bound");
    }
}

#[test]
fn solve_output_is_byte_deterministic() {
    let out1 = temp_dir("det1");
    let out2 = temp_dir("det2");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["solve", "--config"])
            .arg(scenario_path("step.cfg"))
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    for f in ["trajectory.csv", "diagnostics.csv"] {
        let a = std::fs::read(out1.join(f)).unwrap();
        let b = std::fs::read(out2.join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn trajectory_csv_rereads_exactly() {
    let out = temp_dir("reread");
    let status = bin()
        .args(["solve", "--config"])
        .arg(scenario_path("step.cfg"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x,k");
    // 100 steps + 1 nodes, 128 points per node
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101 * 128);
    for row in rows {
        for cell in row.split(',') {
            let v: f64 = cell.parse().expect("every cell parses as f64");
            assert!(v.is_finite());
            // 17 significant digits round-trip bit-exactly
            assert_eq!(format!("{v:.16e}"), cell);
        }
    }
}

#[test]
fn check_subcommand_passes_on_default_scenario() {
    let output = bin()
        .args(["check", "--config"])
        .arg(scenario_path("default.cfg"))
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert_eq!(output.status.code(), Some(0), "stdout: {stdout}");
    assert_eq!(stdout.matches("PASS").count(), 5, "stdout: {stdout}");
    assert_eq!(stdout.matches("FAIL").count(), 0, "stdout: {stdout}");
}

#[test]
fn optimize_zero_budget_reports_initial_objective_only() {
    let out = temp_dir("opt0");
    let status = bin()
        .args(["optimize", "--max-outer", "0", "--config"])
        .arg(scenario_path("step.cfg"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let history = std::fs::read_to_string(out.join("objective_history.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "iter,objective");
    assert_eq!(lines.len(), 2, "history should hold exactly one entry");
    assert!(out.join("control.csv").exists());
}

#[test]
fn invalid_config_exits_one_naming_the_condition() {
    let out = temp_dir("bad");
    let cfg = out.join("bad.cfg");
    std::fs::write(&cfg, "[model]\nmu = 2.0\neps = 1.0\n").unwrap();
    let output = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("growth-fraction bound"),
        "stderr: {stderr}"
    );
}

#[test]
fn compare_local_emits_difference_csv() {
    let out = temp_dir("cmp");
    let status = bin()
        .args(["compare-local", "--config"])
        .arg(scenario_path("step.cfg"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("difference.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,l2_diff,l2_rel");
    let last = lines.last().unwrap();
    let rel: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!(rel > 0.0, "nonlocal effect should be visible: {last}");
}

#[test]
fn empty_trajectory_is_rejected_by_the_writer() {
    use ramsey_cli::config::parse_scenario;
    use ramsey_cli::output::write_trajectory;
    use ramsey_core::forward::Trajectory;

    let cfg_text = std::fs::read_to_string(scenario_path("step.cfg")).unwrap();
    let built = parse_scenario(&cfg_text).unwrap().build().unwrap();
    let empty = Trajectory::from_states(&built.scenario, Vec::new()).unwrap();
    let err = write_trajectory(
        &empty,
        built.scenario.grid(),
        built.scenario.time(),
        &std::env::temp_dir().join("never-written.csv"),
    )
    .unwrap_err();
    assert_eq!(err.kind(), std::io::ErrorKind::InvalidInput);
}
