use std::path::Path;
use std::process::{Command, Output};

use thermal_entangle::{Format, Table};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermal-entangle"))
        .args(args)
        .env("THERMAL_ENTANGLE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn run_to(dir: &Path, name: &str, args: &[&str], format: Format) -> Table {
    let path = dir.join(name);
    let mut all = args.to_vec();
    let p = path.to_str().unwrap();
    all.extend(["--out", p]);
    let out = bin(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    Table::read(&path, format).unwrap()
}

#[test]
fn evolve_matches_unitary_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let t = run_to(
        dir.path(),
        "ev.csv",
        &["evolve", "--kappa", "0", "--gamma", "0", "--temp", "0", "--t-grid", "0:2:0.25", "--p-grid", "0"],
        Format::Csv,
    );
    let ts = t.column("t").unwrap();
    let pg = t.column("p_g").unwrap();
    let pe = t.column("p_e").unwrap();
    assert_eq!(pg[0], 1.0);
    for ((t, g), e) in ts.iter().zip(&pg).zip(&pe) {
        assert!((e - 0.5 * (1.0 - (-4.0 * t * t).exp())).abs() < 1e-12);
        assert!((g + e - 1.0).abs() < 1e-12);
    }
    assert!(dir.path().join("ev_wigner.csv").exists());
}

#[test]
fn csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["evolve", "--t-grid", "0:1:0.5", "--p-grid=-1:1:1"];
    let mut a = args.to_vec();
    a.extend(["--format", "csv"]);
    let csv = run_to(dir.path(), "a.csv", &a, Format::Csv);
    let mut b = args.to_vec();
    b.extend(["--format", "json"]);
    let json = run_to(dir.path(), "a.json", &b, Format::Json);
    assert_eq!(csv.columns, json.columns);
    assert_eq!(csv.rows, json.rows);
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["bell", "--temp-grid", "0:0.2:0.2", "--t-grid", "0.5:1:0.5", "--starts", "4", "--seed", "7"];
    let a = bin(&args);
    let b = bin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn parity_sectors_are_complete() {
    let dir = tempfile::tempdir().unwrap();
    let t = run_to(
        dir.path(),
        "par.csv",
        &["reciprocate", "--mode", "parity", "--kappa", "0.007", "--gamma", "0", "--temp", "0.1", "--time", "1.2"],
        Format::Csv,
    );
    let s: f64 = t.column("probability").unwrap().iter().sum();
    assert!((s - 1.0).abs() < 1e-9);
    assert!(t.column("negativity").unwrap().iter().all(|&n| (-1e-12..=0.5 + 1e-12).contains(&n)));
}

#[test]
fn ideal_bell_saturates_and_stays_classical_above_critical_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let t = run_to(
        dir.path(),
        "bell.csv",
        &["bell", "--kappa", "0", "--gamma", "0", "--temp-grid", "0:0.5:0.25", "--t-grid", "2:8:2", "--starts", "16"],
        Format::Csv,
    );
    let temps = t.column("temp").unwrap();
    let ideal = t.column("bell_ideal").unwrap();
    for temp in [0.0, 0.25, 0.5] {
        let row: Vec<f64> = temps.iter().zip(&ideal).filter(|(a, _)| **a == temp).map(|(_, b)| *b).collect();
        assert_eq!(row.len(), 4);
        assert!(row.windows(2).all(|w| w[1] >= w[0] - 1e-6), "T={temp}: {row:?}");
        if temp == 0.5 {
            assert!(row.iter().all(|&b| b <= 2.0 + 1e-6), "{row:?}");
        }
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.env");
    std::fs::write(&cfg, "temp=0.3\nkappa=0.02\n").unwrap();
    let out = bin(&["evolve", "--config", cfg.to_str().unwrap(), "--temp", "0.5", "--t-grid", "0", "--p-grid", "0"]);
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("# temp=0.5\n"));
    assert!(s.contains("# kappa=0.02\n"));
}

#[test]
fn configuration_errors_exit_2() {
    assert_eq!(bin(&["evolve", "--kappa=-1"]).status.code(), Some(2));
    assert_eq!(bin(&["bell", "--outcome", "x"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.env");
    std::fs::write(&cfg, "no_such_key=1\n").unwrap();
    assert_eq!(bin(&["evolve", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_rejects_wrong_coupling_scale() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.json");
    let out = bin(&["verify", "--lambda-scale", "0.5", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let unitary = v["checks"].as_array().unwrap().iter().find(|c| c["check"] == "unitary_limit").unwrap();
    assert_eq!(unitary["passed"], false);
}
