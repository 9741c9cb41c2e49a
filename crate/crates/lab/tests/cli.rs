use std::path::Path;
use std::process::{Command, Output};

use num_complex::Complex64 as C64;
use scl_core::state::FourierState;
use scl_lab::spec::Ladder;
use scl_lab::{default_spec, ScenarioName};

fn scl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scl")).args(args).current_dir(cwd).env("SCL_THREADS", "1").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn passing_scenario_exits_zero_and_writes_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = scl(&["scenario", "diagonal_concentration", "--out", "rep"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
    for f in ["diagonal_concentration.csv", "diagonal_concentration.json", "diagonal_concentration_density_j8.csv"] {
        assert!(dir.path().join("rep").join(f).is_file(), "{f}");
    }
}

#[test]
fn failed_assertion_exits_two() {
    // Growth is checked from j = 8 on; this ladder has one such step.
    let dir = tempfile::tempdir().unwrap();
    let o = scl(&["scenario", "threshold_sweep", "--jmin", "6", "--jmax", "8", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL subcritical_growth"));
    assert!(dir.path().join("out/threshold_sweep.csv").is_file());
    assert!(!dir.path().join("out/threshold_sweep.json").exists());
}

#[test]
fn errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = scl(&["scenario", "orbit_measure", "--jmin", "9", "--jmax", "3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("orbit_measure"));
    let o = scl(&["scenario", "no_such_thing"], dir.path());
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn config_file_replaces_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = default_spec(ScenarioName::DegenerateQuasimode);
    spec.ladder = Ladder { jmin: 4, jmax: 7 };
    std::fs::write(dir.path().join("spec.json"), serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    let o = scl(&["scenario", "degenerate_quasimode", "--config", "spec.json", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("out/degenerate_quasimode.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let o = scl(&["scenario", "orbit_measure", "--config", "spec.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_prints_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = scl(&["sweep", "degenerate_quasimode", "--observable", "residual", "--x", "h_over_eps", "--jmax", "9"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let fit: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(fit["kind"], "loglog_slope");
    assert!((fit["value"].as_f64().unwrap() - 4.0).abs() < 0.05);
}

#[test]
fn spacing_of_the_laplacian() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("h.json"), r#"{"kind":"quadratic","A":[["1","0"],["0","1"]]}"#).unwrap();
    // Values h²|k|² on a box: consecutive integers |k|² differ by 1, so τ = h/h² = 1/h.
    let o = scl(&["spacing", "--hamiltonian", "h.json", "--h", "2^-4", "--box=-1,1,-1,1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("tau_h = 16\n"), "{out}");
    assert!(out.contains("min_gap = 1/256\n"), "{out}");
    let o = scl(&["spacing", "--hamiltonian", "h.json", "--h", "2^-4", "--ball", "0,0,2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn single_shot_pair_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let u = FourierState::new(0.125, 2, vec![(vec![8, 0], C64::new(0.6, 0.0)), (vec![8, 1], C64::new(0.0, 0.8))]).unwrap();
    let mut buf = Vec::new();
    u.write_jsonl(&mut buf).unwrap();
    std::fs::write(dir.path().join("u.jsonl"), buf).unwrap();
    let c = (2.0 * std::f64::consts::PI).to_string();
    std::fs::write(dir.path().join("a.json"), format!(r#"{{"terms":[{{"m":[0,0],"re":{c},"im":0}}]}}"#)).unwrap();
    let o = scl(&["pair", "--state", "u.jsonl", "--h", "2^-3", "--symbol", "a.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let parts: Vec<f64> = stdout(&o).split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert!((parts[0] - 1.0).abs() < 1e-14 && parts[1].abs() < 1e-14);

    let o = scl(&["density", "--state", "u.jsonl", "--h", "0.125"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "m_1,m_2,re,im");
    assert_eq!(lines.len(), 4);
}

#[test]
fn list_names_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&scl(&["list"], dir.path()));
    for n in ScenarioName::ALL {
        assert!(out.contains(n.as_str()));
    }
}
