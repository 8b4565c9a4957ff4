//! End-to-end tests of the `modent` binary: exit codes and output files.

use std::path::Path;
use std::process::{Command, Output};

fn modent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modent")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let idx = rdr.headers().unwrap().iter().position(|h| h == name).unwrap();
    rdr.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

#[test]
fn constants_print_the_first_coefficients() {
    let out = modent(&["constants", "--alpha", "2", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("K=2406"), "{text}");
    assert!(text.lines().any(|l| l == "1,67370,269476"), "{text}");
}

#[test]
fn constants_reject_alpha_one_as_usage() {
    let out = modent(&["constants", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
}

#[test]
fn unknown_flags_and_help() {
    assert_eq!(modent(&["verify", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(modent(&[]).status.code(), Some(2));
    let help = modent(&["verify", "--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = stdout(&help);
    for flag in ["--alpha", "--n", "--box-lo", "--box-hi", "--grid", "--a", "--phi", "--seed", "--amplitude", "--noise-mode", "--out", "--table-out"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    assert!(text.contains("[default:"));
}

#[test]
fn malformed_table_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("phi.tbl");
    std::fs::write(&table, "not a table\n").unwrap();
    let out = modent(&["verify", "--phi", table.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.toml");
    let table = dir.path().join("phi.tbl");
    let out = modent(&[
        "verify", "--box-lo", "0.25", "--box-hi", "2", "--grid", "8", "--out", report.to_str().unwrap(), "--table-out", table.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: toml::Table = std::fs::read_to_string(&report).unwrap().parse().unwrap();
    assert!(parsed.contains_key("verdict"));
    let phi = std::fs::read_to_string(&table).unwrap();
    assert!(phi.starts_with("# sum-function v1\n"));

    // the written table feeds back in as --phi; its span holds the sum 1
    let again = modent(&["verify", "--box-lo", "0.25", "--box-hi", "2", "--grid", "8", "--phi", table.to_str().unwrap()]);
    assert_ne!(again.status.code(), Some(2), "{}", String::from_utf8_lossy(&again.stderr));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "n = 3\nalpha = 2.0\n").unwrap();
    let out = modent(&["--config", cfg.to_str().unwrap(), "constants", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 1, "{text}");

    std::fs::write(&cfg, "no-such-key = 1\n").unwrap();
    assert_eq!(modent(&["--config", cfg.to_str().unwrap(), "constants"]).status.code(), Some(2));
}

#[test]
fn glue_below_measured_eps_is_a_violation() {
    let out = modent(&["glue", "--seed", "3", "--eps", "1e-9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn glue_saved_instance_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    // the instance directory is created on demand
    let inst = dir.path().join("inst");
    let first = dir.path().join("first.tbl");
    let second = dir.path().join("second.tbl");
    let gen = modent(&[
        "glue", "--seed", "5", "--amplitude", "0", "--save-instance", inst.to_str().unwrap(),
        "--table-out", first.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0));
    let a = inst.join("a.tbl");
    let b = inst.join("b.tbl");
    assert!(Path::new(&a).exists() && Path::new(&b).exists());
    let load = modent(&[
        "glue", "--a-table", a.to_str().unwrap(), "--b-table", b.to_str().unwrap(),
        "--table-out", second.to_str().unwrap(),
    ]);
    assert_eq!(load.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(first).unwrap(), std::fs::read_to_string(second).unwrap());
}

#[test]
fn amplitude_sweep_error_is_nondecreasing() {
    let out = modent(&["sweep", "--grid", "8", "--values", "0,1e-4,1e-3,1e-2"]);
    assert_eq!(out.status.code(), Some(0));
    let errs: Vec<f64> = csv_column(&stdout(&out), "sup_error").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(errs.len(), 4);
    assert!(errs.windows(2).all(|w| w[1] + 1e-12 >= w[0]), "{errs:?}");
}

#[test]
fn n_sweep_bound_is_strictly_increasing() {
    let out = modent(&["sweep", "--vary", "n", "--values", "1,2,3", "--alpha", "2", "--box-hi", "1", "--grid", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let bounds: Vec<f64> = csv_column(&stdout(&out), "bound_value").iter().map(|v| v.parse().unwrap()).collect();
    assert!(bounds.windows(2).all(|w| w[1] > w[0]), "{bounds:?}");
}

#[test]
fn empty_sweep_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = modent(&["sweep", "--values", "", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("vary,value,"));
}
