use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn biobench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biobench")).args(args).env_remove("BIOBENCH_DATA").output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(&biobench(args))).unwrap()
}

#[test]
fn run_is_deterministic() {
    for app in ["hcl", "ecl", "bpfree"] {
        let a = biobench(&["run", app, "--seed", "7"]);
        let b = biobench(&["run", app, "--seed", "7"]);
        assert_eq!(stdout(&a), stdout(&b), "{app}");
    }
}

#[test]
fn fixture_input_reports_bandwidth() {
    let dir = root().join("fixtures/hcl");
    let r = json(&["run", "hcl", "--input", dir.to_str().unwrap()]);
    assert_eq!(r["metrics"]["input_bandwidth"], 1536);
    assert_ne!(r["input"], "synthetic");
}

#[test]
fn fixture_matches_synthetic_window() {
    let dir = root().join("fixtures/ecl");
    let a = json(&["run", "ecl", "--input", dir.to_str().unwrap(), "--seed", "0"]);
    let b = json(&["run", "ecl", "--seed", "0"]);
    assert_eq!(a["classification"], b["classification"]);
    assert_eq!(a["ops"], b["ops"]);
}

#[test]
fn unknown_app_is_config_error() {
    let o = biobench(&["run", "nosuchapp"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_platform_filter_is_config_error() {
    let o = biobench(&["compare", "--platforms", ""]);
    assert_eq!(o.status.code(), Some(2));
    let o = biobench(&["compare", "--platforms", "NotABoard"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_input_dir_is_config_error() {
    let o = biobench(&["run", "hcl", "--input", "/nonexistent/dir"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn characterize_all_and_one() {
    let all: Value = serde_json::from_str(&stdout(&biobench(&["characterize", "--format", "json"]))).unwrap();
    assert_eq!(all.as_array().unwrap().len(), 8);
    let one = stdout(&biobench(&["characterize", "ecl", "--format", "csv"]));
    assert_eq!(one.lines().count(), 2);
    assert!(one.lines().nth(1).unwrap().starts_with("ECL,"));
}

#[test]
fn characterize_jobs_do_not_change_output() {
    let a = stdout(&biobench(&["characterize", "--format", "json", "--jobs", "1"]));
    let b = stdout(&biobench(&["characterize", "--format", "json", "--jobs", "4"]));
    assert_eq!(a, b);
}

#[test]
fn golden_cnn_report() {
    let want = std::fs::read_to_string(root().join("golden/seizdetcnn/report.json")).unwrap();
    assert_eq!(stdout(&biobench(&["run", "seizdetcnn", "--seed", "0"])), want);
}

#[test]
fn reports_match_schema() {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(root().join("schemas/run_report.schema.json")).unwrap()).unwrap();
    let v = jsonschema::validator_for(&schema).unwrap();
    for app in ["hcl", "seizdetsvm", "seizdetcnn", "cwm", "gcl", "coughdet", "ecl", "bpfree"] {
        let r = json(&["run", app]);
        let errs: Vec<String> = v.iter_errors(&r).map(|e| e.to_string()).collect();
        assert!(errs.is_empty(), "{app}: {errs:?}");
    }
    let mut r = json(&["run", "hcl"]);
    r["metrics"]["duty_cycle"]["bin"] = "enormous".into();
    assert!(!v.is_valid(&r));
}

#[test]
fn corrupted_table_is_runtime_error() {
    let d = tempfile::tempdir().unwrap();
    let mut csv = biobench_core::power::ENERGY_TABLE_CSV.to_string();
    let line = csv.lines().find(|l| l.starts_with("GAP9,HCL")).unwrap().to_string();
    let mut cells: Vec<String> = line.split(',').map(str::to_string).collect();
    let last = cells.len() - 1;
    cells[last] = "99.0".into();
    csv = csv.replace(&line, &cells.join(","));
    std::fs::write(d.path().join("platform_energy.csv"), csv).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_biobench")).args(["compare"]).env("BIOBENCH_DATA", d.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn explicit_table_path() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("t.csv");
    std::fs::write(&p, biobench_core::power::ENERGY_TABLE_CSV).unwrap();
    let c = json(&["compare", "--table", p.to_str().unwrap(), "--apps", "hcl", "--format", "json"]);
    assert_eq!(c[0]["winner"]["platform"], "Apollo3Blue");
}

#[test]
fn timing_and_output_file() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("r.json");
    let o = biobench(&["run", "cwm", "--timing", "-o", p.to_str().unwrap()]);
    assert!(stdout(&o).is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert!(r["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(json(&["run", "cwm"]).get("wall_time_s").is_none());
}

#[test]
fn csv_and_text_formats() {
    let csv = stdout(&biobench(&["run", "hcl", "--format", "csv"]));
    assert_eq!(csv.lines().next(), Some("field,value"));
    assert!(csv.lines().any(|l| l == "metrics.duty_cycle.bin,low"));
    let text = stdout(&biobench(&["compare", "--apps", "seizdetcnn"]));
    assert!(text.contains("GAP9"));
    assert!(text.contains("note (SeizDetCNN)"));
}

#[test]
fn gnuplot_export() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("e.dat");
    stdout(&biobench(&["compare", "--gnuplot", p.to_str().unwrap()]));
    let g = std::fs::read_to_string(p).unwrap();
    assert!(g.lines().any(|l| l.starts_with("HCL Apollo3Blue")));
}

#[test]
fn gen_fixtures_and_models() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    stdout(&biobench(&["gen-fixtures", "--out", out, "--seed", "4"]));
    stdout(&biobench(&["export-models", "--out", out, "--seed", "4"]));
    assert!(d.path().join("configs/gcl.toml").is_file());
    assert!(d.path().join("models/seizdetsvm.json").is_file());
    // a run against generated data agrees with the built-in synthetic window
    let cfg = d.path().join("configs/hcl.toml");
    let a = json(&["run", "hcl", "--config", cfg.to_str().unwrap(), "--input", d.path().join("fixtures/hcl").to_str().unwrap()]);
    let b = json(&["run", "hcl", "--seed", "4"]);
    assert_eq!(a["classification"], b["classification"]);
}

#[test]
fn config_app_mismatch() {
    let cfg = root().join("configs/ecl.toml");
    let o = biobench(&["run", "hcl", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_zero() {
    let o = biobench(&["--help"]);
    assert!(stdout(&o).contains("characterize"));
}
