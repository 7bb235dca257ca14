use std::path::Path;
use std::process::{Command, Output};

use kpp_carleman::harness::{RunConfig, Table};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpp-carleman"))
        .args(args)
        .env("KPP_CARLEMAN_OUT", dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn no_resonance_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["no-resonance"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = Table::read(&dir.path().join("no_resonance.csv")).unwrap();
    assert_eq!(t.rows.len(), 7);
}

#[test]
fn simulate_small_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "-n", "4", "-N", "2", "--steps", "500", "--no-svg"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("reference.csv").exists());
    let o = run(dir.path(), &["bounds", "-n", "4", "-N", "2", "--steps", "500"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("bounds.csv").exists());
}

#[test]
fn diagonalize_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["diagonalize", "-n", "4", "-N", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = Table::read(&dir.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(t.rows.len(), 4 + 16 + 64);
    let o = run(dir.path(), &["estimate", "-n", "4", "-N", "2", "--steps", "500"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("estimate.csv").exists());
}

#[test]
fn sweep_by_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["sweep", "--param", "K", "--values", "1,2", "-n", "4", "-N", "2", "--solver", "taylor", "--steps", "200", "--no-svg"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn precondition_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["simulate", "-n", "0"])), 2);
    assert_eq!(code(&run(dir.path(), &["simulate", "--diffusion", "-1"])), 2);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[carleman]\nn = \"eight\"\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["simulate", "--config", bad.to_str().unwrap()])), 2);
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate", "--horizon", "100", "--steps", "10", "--no-svg"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = RunConfig::default();
    c.carleman.n = 4;
    c.carleman.order = 2;
    c.solver.steps = 400;
    c.output.svg = false;
    let path = dir.path().join("run.toml");
    std::fs::write(&path, c.to_toml_string().unwrap()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), c);
    let o = run(dir.path(), &["simulate", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
