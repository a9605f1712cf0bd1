use std::fs;
use std::path::Path;
use std::process::Command;

use entrostab::bl_solver::{SolutionField, SolverConfig};
use entrostab::cli::{read_field, run_budget, run_correlate, run_flatplate};
use entrostab::config::RunConfig;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entrostab"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, body).unwrap();
    p
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn verify_succeeds_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.samples = 200\n");
    let out = dir.path().join("out");
    let st = binary().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let text = fs::read_to_string(out.join("verify.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(out.join("effective.cfg").exists());
}

#[test]
fn broken_symmetry_is_a_property_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "closure.symmetry_assumption = off\ngas.pr_q1 = 1.0\nrun.samples = 300\n");
    let st = binary().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn bad_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.seed = 3\ngrid.ny = -1\n");
    let out = binary().args(["flatplate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn correlation_table() {
    let dir = tempfile::tempdir().unwrap();
    let rows = run_correlate(&[1.0, 2000.0, 10_000.0, 20_000.0], dir.path()).unwrap();
    assert!((rows[0].1 - 1.0 / 6.012).abs() < 1e-12);
    assert!((rows[2].1 - 2.633e-3).abs() < 5e-7);
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1));
    assert!(dir.path().join("correlate.csv").exists());
}

#[test]
fn config_render_round_trips() {
    let text =
        "gas.gamma = 1.3\nclosure.entropy_clip = off\ngrid.ny = 80\nrun.mach = 0.2\noutput.profiles = 6000, 9000\n";
    let a = RunConfig::parse(text).unwrap();
    let b = RunConfig::parse(&a.render()).unwrap();
    assert_eq!(a, b);
    assert_eq!(b.solver.ny, 80);
}

/// Field, profiles and budget files from a single coarse run.
#[test]
fn flatplate_outputs_are_deterministic_and_reloadable() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig {
        solver: SolverConfig { nx: 20, re_theta_target: 8000.0, ..Default::default() },
        ..Default::default()
    };
    cfg.profiles = vec![6000.0];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let report = run_flatplate(&cfg, &a).unwrap();
    run_flatplate(&cfg, &b).unwrap();
    for name in ["stations.csv", "field.csv", "profile_6000.csv", "summary.txt", "effective.cfg"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }

    let stations = fs::read_to_string(a.join("stations.csv")).unwrap();
    assert_eq!(column(&stations, "re_theta").len(), report.field.stations.len());

    let field: SolutionField = read_field(&a.join("field.csv"), &report.field.freestream).unwrap();
    assert_eq!(field.stations.len(), report.field.stations.len());
    let (s0, s1) = (report.field.nearest_station(6000.0), field.nearest_station(6000.0));
    assert!((s0.diagnostics.cf / s1.diagnostics.cf - 1.0).abs() < 1e-9);

    let written = run_budget(&cfg, &a.join("field.csv"), &[6000.0], &a).unwrap();
    assert_eq!(written.len(), 1);
    let budget = fs::read_to_string(&written[0]).unwrap();
    let total = column(&budget, "plotted_total");
    assert!(!total.is_empty() && total.iter().all(|v| v.is_finite()));
}
