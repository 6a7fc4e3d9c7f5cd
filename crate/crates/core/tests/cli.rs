use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use modal_observer::io::read_csv;
use modal_observer::scenario::REFERENCE_SCENARIO;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modal-observer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_a_nonincreasing_lyapunov_column() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--out", path(dir.path())]);
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(text.starts_with("# format=1\nt,Delta_1,"));
    let t = read_csv(&dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(t.rows.len(), 2000);
    assert_eq!(t.header.len(), 1 + 12 + 2);
    let w = t.header.iter().position(|h| h == "W").unwrap();
    for pair in t.rows.windows(2) {
        assert!(pair[1][w] <= pair[0][w] * (1.0 + 1e-10));
    }
    assert!(t.rows[1999][w] < 1e-2 * t.rows[0][w]);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        run_ok(&["simulate", "--out", path(dir.path())]);
        run_ok(&["resolvent", "--n-modes", "8", "--seed", "7", "--out", path(dir.path())]);
        run_ok(&["sweep", "--gamma", "0.8,6", "--n-modes", "6", "--t-end", "5", "--samples", "200", "--out", path(dir.path())]);
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8, "{names:?}");
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn dump_round_trip_reproduces_trajectory() {
    let dump = tempfile::tempdir().unwrap();
    let direct = tempfile::tempdir().unwrap();
    let reloaded = tempfile::tempdir().unwrap();
    run_ok(&["assemble", "--n-modes", "9", "--gamma", "0.8", "--out", path(dump.path())]);
    run_ok(&["simulate", "--n-modes", "9", "--gamma", "0.8", "--out", path(direct.path())]);
    run_ok(&["simulate", "--from-dump", path(dump.path()), "--out", path(reloaded.path())]);
    let x = fs::read(direct.path().join("trajectory.csv")).unwrap();
    let y = fs::read(reloaded.path().join("trajectory.csv")).unwrap();
    assert!(x == y);
}

#[test]
fn assemble_shapes_and_curvature_only_switch() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["assemble", "--out", path(dir.path())]);
    let c1 = read_csv(&dir.path().join("c1.csv")).unwrap();
    assert_eq!((c1.rows.len(), c1.header.len()), (5, 7));
    let f = read_csv(&dir.path().join("f.csv")).unwrap();
    assert_eq!((f.rows.len(), f.header.len()), (12, 6));
    // Lower half of F is zero.
    assert!(f.rows[6..].iter().all(|r| r[1..].iter().all(|v| *v == 0.0)));
    run_ok(&["assemble", "--curvature-only", "--out", path(dir.path())]);
    let c1 = read_csv(&dir.path().join("c1.csv")).unwrap();
    assert_eq!(c1.rows.len(), 4);
}

#[test]
fn modes_on_bare_beam_are_multiples_of_pi() {
    let dir = tempfile::tempdir().unwrap();
    let text = REFERENCE_SCENARIO
        .replace("mass = 0.1 ", "mass = 0.0 ")
        .replace("spring = 10.0 ", "spring = 0.0 ")
        .replace("length = 1.875", "length = 1.0")
        .replace("attach = 1.378", "attach = 0.4")
        .replace("positions = [0.075, 0.716, 1.128, 1.555]", "positions = [0.3]")
        .replace("start = 0.2, end = 0.4", "start = 0.1, end = 0.2");
    let cfg = write_config(dir.path(), "bare.toml", &text);
    run_ok(&["modes", "--config", &cfg, "--n-modes", "10", "--out", path(dir.path())]);
    let t = read_csv(&dir.path().join("modes.csv")).unwrap();
    assert_eq!(t.rows.len(), 10);
    for (j, row) in t.rows.iter().enumerate() {
        let expected = (j + 1) as f64 * PI;
        assert!((row[1] - expected).abs() < 1e-9 * expected);
    }
    let profile = read_csv(&dir.path().join("eigenfunctions.csv")).unwrap();
    assert_eq!(profile.header.len(), 11);
}

#[test]
fn check_passes_on_reference_and_names_unobserved_modes() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_ok(&["check", "--out", path(dir.path())]);
    assert!(report.contains("overall: pass"), "{report}");

    let broken = REFERENCE_SCENARIO
        .replace("attach = 1.378", "attach = 0.9375")
        .replace("positions = [0.075, 0.716, 1.128, 1.555]", "positions = [0.9375]");
    let cfg = write_config(dir.path(), "broken.toml", &broken);
    let out = run(&["check", "--config", &cfg, "--n-modes", "6", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("unobserved modes: 2, 4, 6"), "{report}");
}

#[test]
fn resolvent_report_lists_every_shift() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_ok(&["resolvent", "--n-modes", "5", "--out", path(dir.path())]);
    assert_eq!(report.matches("bound holds = true").count(), 3, "{report}");
    let m = read_csv(&dir.path().join("resolvent_m.csv")).unwrap();
    assert_eq!(m.rows.len(), 3 * 25);
    let blocks = read_csv(&dir.path().join("resolvent_blocks.csv")).unwrap();
    assert_eq!(blocks.rows.len(), 3 * 4 * 25);
}

#[test]
fn rk4_integrator_agrees_with_exact_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rk4.toml",
        &REFERENCE_SCENARIO.replace("integrator = \"exponential\"", "integrator = \"rk4\""),
    );
    let exact = tempfile::tempdir().unwrap();
    let rk = tempfile::tempdir().unwrap();
    let common = ["--n-modes", "3", "--gamma", "0.8", "--t-end", "4", "--samples", "100"];
    let mut a = vec!["simulate", "--out", path(exact.path())];
    a.extend(common);
    let mut b = vec!["simulate", "--config", &cfg, "--out", path(rk.path())];
    b.extend(common);
    run_ok(&a);
    run_ok(&b);
    let x = read_csv(&exact.path().join("trajectory.csv")).unwrap();
    let y = read_csv(&rk.path().join("trajectory.csv")).unwrap();
    for (r, s) in x.rows.iter().zip(&y.rows) {
        for (u, v) in r.iter().zip(s) {
            assert!((u - v).abs() < 1e-8);
        }
    }
}

#[test]
fn invalid_configuration_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (REFERENCE_SCENARIO.replace("ei = 4.9", "ei = 0.0"), "beam"),
        (REFERENCE_SCENARIO.replace("positions = [0.075", "positions = [2.5"), "sensors"),
        (REFERENCE_SCENARIO.replace("t_end = 20.0", "t_end = -1.0"), "time.t_end"),
        (REFERENCE_SCENARIO.replace("lambdas = [1e-3", "lambdas = [0.0"), "resolvent.lambdas[0]"),
        (REFERENCE_SCENARIO.replace("[observer]", "[observer]\nnoise = 1"), "noise"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("bad{i}.toml"), text);
        let out = run(&["simulate", "--config", &cfg, "--out", path(dir.path())]);
        assert_eq!(out.status.code(), Some(1));
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(needle), "expected `{needle}` in: {err}");
    }
    let out = run(&["simulate", "--gamma", "1,2", "--out", path(dir.path())]);
    assert!(String::from_utf8(out.stderr).unwrap().contains("observer.gains"));
    let out = run(&["simulate", "--config", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(1));
}
