use std::path::Path;
use std::process::{Command, Output};

fn gff4(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gff4"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .env_remove("GFF4_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

#[test]
fn specfun_table_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = gff4(dir.path(), &["specfun-table", "--points", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "specfun.csv");
    assert!(!csv.contains('\r'));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "x,i0,i1,i2,k0,k1,turan,f1,f2,green");
    let m = manifest(dir.path());
    assert_eq!(m["command"], "specfun-table");
    assert_eq!(m["exit_code"], 0);
    assert!(m["config"].as_str().unwrap().contains("points = 10"));
}

#[test]
fn config_echo_replays_identically() {
    let first = tempfile::tempdir().unwrap();
    let out = gff4(first.path(), &["sample", "--k", "2", "--levels", "0.2,0.05", "--replications", "3", "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let echo = manifest(first.path())["config"].as_str().unwrap().to_string();
    let second = tempfile::tempdir().unwrap();
    let cfg = second.path().join("echo.toml");
    std::fs::write(&cfg, &echo).unwrap();
    let out = gff4(second.path(), &["sample", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let echo2 = manifest(second.path())["config"].as_str().unwrap().to_string();
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("output_dir")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&echo), strip(&echo2));
    assert_eq!(read(first.path(), "field.csv"), read(second.path(), "field.csv"));
    assert_eq!(read(first.path(), "field.csv").lines().count(), 1 + 3 * 16 * 2);
}

#[test]
fn thread_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["sample", "--k", "3", "--levels", "0.1,0.01", "--replications", "4"];
    assert_eq!(gff4(a.path(), &[&args[..], &["--threads", "1"]].concat()).status.code(), Some(0));
    assert_eq!(gff4(b.path(), &[&args[..], &["--threads", "3"]].concat()).status.code(), Some(0));
    assert_eq!(read(a.path(), "field.csv"), read(b.path(), "field.csv"));
}

#[test]
fn dimension_report_has_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = gff4(dir.path(), &["dimension", "--a", "0.5", "--k", "4", "--replications", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "dimension.json")).unwrap();
    assert!(report.get("dimension_estimate").is_some());
    assert_eq!(report["a"], 0.5);
    assert_eq!(read(dir.path(), "dimension.csv").lines().count(), 1 + 4);
}

#[test]
fn verify_all_replays_byte_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = gff4(d.path(), &["verify-all", "--profile", "quick"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["verify.json", "verify.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let summary: serde_json::Value = serde_json::from_str(&read(a.path(), "verify.json")).unwrap();
    assert_eq!(summary["total"], 11);
}

#[test]
fn supercritical_convergence_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = gff4(dir.path(), &["liouville", "--mode", "convergence", "--gamma", "4.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma^2 < 2 pi^2"));
}

#[test]
fn crowded_lattice_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = gff4(dir.path(), &["sample", "--k", "6", "--levels", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2*eps0"));
}

#[test]
fn underflowing_coefficients_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = gff4(dir.path(), &["specfun-table", "--x-min", "1e-200", "--x-max", "1", "--points", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("specfun::f_coeffs"));
    assert_eq!(manifest(dir.path())["exit_code"], 2);
}

#[test]
fn unknown_config_key_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = gff4(dir.path(), &["cov-table", "--set", "upper.alpha=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cli::config"));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gff4"))
        .args(["cov-table"])
        .env("GFF4_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("cov.csv").exists());
    let cov: serde_json::Value = serde_json::from_str(&read(dir.path(), "cov.json")).unwrap();
    assert_eq!(cov["size"], 12);
    assert_eq!(cov["jitter_applied"], 0.0);
}
