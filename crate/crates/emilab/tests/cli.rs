use std::fs;
use std::process::{Command, Output};

use emi_core::sparse::{read_matrix_market, read_vector};
use emilab::RESULT_HEADER;

fn emilab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emilab")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn mesh_reports_counts_and_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mesh.txt");
    let out = emilab(&["mesh", "--nh", "8", "--cells", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("n0=72 n_in=25 n_gamma=16 n=97"), "{text}");
    let mesh = fs::read_to_string(path).unwrap();
    let mut lines = mesh.lines();
    assert_eq!(lines.next().unwrap(), "81 128");
    assert_eq!(mesh.lines().count(), 1 + 81 + 128);
}

#[test]
fn assemble_exports_matrix_market_and_rhs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.mtx");
    let out = emilab(&["assemble", "--nh", "8", "--export-mm", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
    let a = read_matrix_market::<f64, _>(text.as_bytes()).unwrap();
    let b = read_vector::<f64, _>(fs::read_to_string(path.with_extension("rhs")).unwrap().as_bytes()).unwrap();
    assert_eq!(a.nrows(), 97);
    assert_eq!(b.len(), 97);
    assert!(a.is_symmetric());

    // the exported system solves to the same iteration count as the assembled one
    let imported = emilab(&["solve", "--matrix", path.to_str().unwrap(), "--rhs", path.with_extension("rhs").to_str().unwrap()]);
    assert_eq!(imported.status.code(), Some(0));
    let direct = emilab(&["solve", "--nh", "8"]);
    let row = stdout(&direct).lines().nth(1).unwrap().to_string();
    let iterations = row.split(',').nth(6).unwrap();
    assert!(stdout(&imported).contains(&format!("iterations={iterations} ")), "{}", stdout(&imported));
}

#[test]
fn solve_writes_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("row.csv");
    let out = emilab(&["solve", "--nh", "16", "--solver", "amg", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], RESULT_HEADER.join(","));
    assert!(lines[1].starts_with("A,1,16,0.01,0.0001,amg,"));
    assert!(lines[1].ends_with(",321,240,32,converged"));
}

#[test]
fn exit_code_two_on_config_errors() {
    assert_eq!(emilab(&["mesh", "--nh", "12"]).status.code(), Some(2));
    assert_eq!(emilab(&["mesh", "--model", "B", "--nh", "16", "--cells", "25"]).status.code(), Some(2));
    assert_eq!(emilab(&["solve", "--solver", "gmres"]).status.code(), Some(2));
    assert_eq!(emilab(&["solve", "--tau", "-1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "nh=8\nspeed=fast\n").unwrap();
    assert_eq!(emilab(&["table", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let mtx = dir.path().join("m.mtx");
    fs::write(&mtx, "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 1.0\n").unwrap();
    assert_eq!(
        emilab(&["solve", "--matrix", mtx.to_str().unwrap(), "--solver", "blockdiag"]).status.code(),
        Some(2)
    );
}

#[test]
fn exit_code_three_on_solver_failure() {
    let out = emilab(&["solve", "--nh", "16", "--max-iter", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("max_iter"));
}

#[test]
fn table_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tau.cfg");
    let csv = dir.path().join("tau.csv");
    fs::write(&cfg, "# time-step table\nmodel=A\nnh=16\ncells=1\ntau=0.1,0.001\nsolver=blockdiag,amg\n").unwrap();
    let out = emilab(&["table", "--kind", "tau", "--config", cfg.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(csv).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let order: Vec<(&str, &str)> = rows.iter().map(|r| (r[5], r[3])).collect();
    assert_eq!(order, vec![("blockdiag", "0.1"), ("blockdiag", "0.001"), ("amg", "0.1"), ("amg", "0.001")]);
}

#[test]
fn spectra_emits_json_lines_and_quantiles() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    let out = emilab(&["spectra", "--nh", "8", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let records: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 4);
    assert_eq!(records[0]["check"], "scaled_symbol");
    assert!(records.iter().all(|r| r["error"].is_null()));
    let q = fs::read_to_string(csv).unwrap();
    assert!(q.starts_with("check,nh,N,k,p,eig_quantile,symbol_quantile"));
    // 97 + 97 + 97 eigenvalues for the system checks, 64 for the Toeplitz matrix
    assert_eq!(q.lines().count(), 1 + 3 * 97 + 64);
}

#[test]
fn table_takes_comma_lists_on_the_command_line() {
    let out = emilab(&["table", "--kind", "cells", "--nh", "16,32", "--cells", "1", "--solver", "blockdiag,amg"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r[5], r[2])).collect();
    assert_eq!(keys, vec![("blockdiag", "16"), ("blockdiag", "32"), ("amg", "16"), ("amg", "32")]);
}

#[test]
fn output_directory_from_config_receives_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("nh=16\ntau=0.1,0.01\noutput={}\n", out_dir.display())).unwrap();
    let out = emilab(&["table", "--kind", "tau", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
    let text = fs::read_to_string(out_dir.join("table_tau.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}
