use std::path::Path;
use std::process::Command;

use asph_cli::output::read_csv;

fn asph() -> Command {
    Command::new(env!("CARGO_BIN_EXE_asph"))
}

fn metric(dir: &Path, key: &str) -> String {
    let text = std::fs::read_to_string(dir.join("metrics.txt")).unwrap();
    asph_core::MetricsSummary::parse(&text).into_iter().find(|(k, _)| k == key).map(|(_, v)| v).unwrap()
}

#[test]
fn unknown_scenario_exits_nonzero() {
    let out = asph().args(["--scenario", "nosuch"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
}

#[test]
fn missing_scenario_exits_nonzero() {
    assert!(!asph().output().unwrap().status.success());
}

#[test]
fn print_config_shows_defaults_and_overrides() {
    let out = asph().args(["--scenario", "rectangle", "--ny", "40", "--print-config"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ny = 40"));
    assert!(text.contains("ratio = 4"));
    assert!(text.contains("snapshots = 0,0.02,0.04,0.2"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "scenario = patch\nratio = 2\ndp = 0.05\n").unwrap();
    let out = asph().arg("--config").arg(&cfg).args(["--ratio", "4", "--print-config"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("ratio = 4") && text.contains("dp = 0.05"));
    std::fs::write(&cfg, "scenario = patch\nratio = two\n").unwrap();
    let out = asph().arg("--config").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn patch_run_writes_one_csv_line_per_particle() {
    let dir = tempfile::tempdir().unwrap();
    let status = asph()
        .args(["--scenario", "patch", "--dp", "0.05", "--ratio", "2", "--out-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let (header, rows) = read_csv(&dir.path().join("patch_r2.csv")).unwrap();
    assert_eq!(header, ["x", "y", "phi", "dphi_dt", "flagged"]);
    assert_eq!(rows.len(), 10 * 20);
    assert_eq!(metric(dir.path(), "particle_count"), "200");
    assert!(rows.iter().all(|r| (r[3] - 4.0).abs() < 1e-6));
}

#[test]
fn vtk_output_is_selectable() {
    let dir = tempfile::tempdir().unwrap();
    let status = asph()
        .args(["--scenario", "patch", "--dp", "0.1", "--format", "vtk", "--out-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("patch_r1.vtk")).unwrap();
    assert!(text.starts_with("# vtk DataFile"));
}

#[test]
fn convergence_flag_reports_order() {
    let out = asph().args(["--scenario", "sine", "--convergence", "0.1,0.05,0.025"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let order: f64 = text.lines().last().unwrap().trim_start_matches("order = ").parse().unwrap();
    assert!(order > 1.7);
    let out = asph().args(["--scenario", "sine", "--convergence", "0.1,0.05"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn short_rectangle_run_writes_snapshots_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let status = asph()
        .args(["--scenario", "rectangle", "--ny", "10", "--t-end", "0.04", "--snapshots", "0,0.02", "--out-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["snapshot_t0.csv", "snapshot_t0p02.csv", "profile_t0p02.csv", "metrics.txt", "timing.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let rmse: f64 = metric(dir.path(), "rmse").parse().unwrap();
    assert!(rmse > 0.0 && rmse < 0.05);
}
