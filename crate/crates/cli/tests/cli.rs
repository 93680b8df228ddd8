use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slit-harmonic"))
        .args(args)
        .env("SLIT_HARMONIC_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(code(&run(&["solve", "--no-such-flag"])), 64);
    assert_eq!(code(&run(&["no-such-command"])), 64);
    assert_eq!(code(&run(&["solve", "--a", "0.1", "--s", "0.3"])), 64);
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn invalid_parameters_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    assert_eq!(code(&run(&["solve", "--s", "1.5", "--out", &o])), 1);
    assert_eq!(code(&run(&["solve", "--out", &o])), 1);
}

#[test]
fn iteration_cap_reports_no_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let r = run(&["solve", "--s", "0.5", "--grid-n", "32", "--max-iter", "3", "--out", &o]);
    assert_eq!(code(&r), 2);
}

#[test]
fn solve_is_byte_identical_across_runs() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let o = out_arg(d.path());
        let r = run(&["solve", "--s", "0.25", "--data", "spectral", "--seed", "7", "--grid-n", "32", "--out", &o]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    for name in ["solution.csv", "solve.json"] {
        let a = std::fs::read(d1.path().join(name)).unwrap();
        let b = std::fs::read(d2.path().join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn solution_csv_carries_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    assert_eq!(code(&run(&["solve", "--a", "-0.5", "--grid-n", "16", "--out", &o])), 0);
    let text = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(text.starts_with("# slit-harmonic"));
    assert!(text.contains("# s = 0.75, a = -0.5"));
    assert!(text.contains("x,y,value\n"));
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"s": 0.5, "grid_n": 16}"#).unwrap();
    let o = out_arg(dir.path());
    let c = cfg.to_str().unwrap();
    assert_eq!(code(&run(&["solve", "--config", c, "--out", &o])), 0);
    let text = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(text.contains("s = 0.5"));
    assert!(text.contains("grid-n = 16"));

    assert_eq!(code(&run(&["solve", "--config", c, "--a", "0.5", "--out", &o])), 0);
    let text = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(text.contains("s = 0.25, a = 0.5"));

    std::fs::write(&cfg, r#"{"s": 0.5, "colour": 3}"#).unwrap();
    assert_eq!(code(&run(&["solve", "--config", c, "--out", &o])), 1);
}

#[test]
fn obstacle_writes_free_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let r = run(&["obstacle", "--s", "0.5", "--grid-n", "32", "--out", &o]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let fb = std::fs::read_to_string(dir.path().join("free_boundary.csv")).unwrap();
    let rows: Vec<&str> = fb.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "x_f,side");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].ends_with(",left") && rows[2].ends_with(",right"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("obstacle.json")).unwrap()).unwrap();
    assert!(json["complementarity"]["contact_flux_min"].as_f64().unwrap() >= 0.0);
}

#[test]
fn spectral_checks_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let r = run(&["spectral", "--s", "0.5", "--j-max", "4", "--dump-basis", "2", "--grid-n", "16", "--out", &o]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stdout));
    for name in ["gram.csv", "coefficients.csv", "spectral.json", "basis_2.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn distance_check_exit_follows_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    let r = run(&["distance-check", "--amplitude", "0.05", "--samples", "200", "--out", &o]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("distance_check.json")).unwrap()).unwrap();
    let pass = json["pass"].as_bool().unwrap();
    assert_eq!(code(&r), if pass { 0 } else { 1 });
    assert!(json["estimates"]["ratio_r"]["exponent"].is_number());
}

#[test]
fn barrier_check_passes_in_range() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    assert_eq!(code(&run(&["barrier-check", "--s", "0.5", "--grid-n", "32", "--out", &o])), 0);
    // α must stay below 1 - s.
    assert_eq!(code(&run(&["barrier-check", "--s", "0.5", "--alpha", "0.6", "--out", &o])), 1);
}

#[test]
fn constant_field_plots_in_one_color() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let mut text = String::from("# constant\nx,y,value\n");
    for j in 0..5 {
        for i in 0..5 {
            text.push_str(&format!("{},{},3.5\n", i as f64 * 0.25, j as f64 * 0.25));
        }
    }
    std::fs::write(&csv, text).unwrap();
    let svg = dir.path().join("c.svg");
    let r = run(&["plot", csv.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let body = std::fs::read_to_string(&svg).unwrap();
    let fills: std::collections::BTreeSet<&str> = body
        .lines()
        .filter(|l| l.starts_with("<rect x="))
        .filter_map(|l| l.split("fill=\"").nth(1))
        .map(|f| &f[..7])
        .collect();
    assert_eq!(fills.len(), 1, "{fills:?}");
}

#[test]
fn plot_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    assert_eq!(code(&run(&["solve", "--s", "0.5", "--grid-n", "16", "--out", &o])), 0);
    let csv = dir.path().join("solution.csv");
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    for p in [&a, &b] {
        assert_eq!(code(&run(&["plot", csv.to_str().unwrap(), "--out", p.to_str().unwrap()])), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn malformed_csv_exits_65() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "x,y,value\n0,0,1\n0.5,0\n").unwrap();
    assert_eq!(code(&run(&["plot", csv.to_str().unwrap()])), 65);
    std::fs::write(&csv, "a,b\n1\n").unwrap();
    assert_eq!(code(&run(&["plot", csv.to_str().unwrap()])), 65);
}

#[test]
fn regularity_reads_a_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = out_arg(dir.path());
    assert_eq!(code(&run(&["solve", "--s", "0.5", "--grid-n", "64", "--out", &o])), 0);
    let csv = dir.path().join("solution.csv");
    let r = run(&[
        "regularity",
        "--field",
        csv.to_str().unwrap(),
        "--reflected",
        "--center",
        "0,0",
        "--scales",
        "0.5,0.25,0.125",
        "--out",
        &o,
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("regularity.json")).unwrap()).unwrap();
    // The discrete U_a is homogeneous of degree s about the tip.
    let slope = json["slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() < 0.05, "{slope}");
}
