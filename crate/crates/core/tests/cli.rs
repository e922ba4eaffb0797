use std::path::Path;
use std::process::{Command, Output};

use iga_majorant::study::CSV_HEADER;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iga-majorant"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

/// CSV without the four timing columns.
fn stable_csv(dir: &Path) -> Vec<String> {
    std::fs::read_to_string(dir.join("study.csv"))
        .unwrap()
        .lines()
        .map(|l| l.split(',').take(12).collect::<Vec<_>>().join(","))
        .collect()
}

#[test]
fn uniform_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["--example", "1", "--case", "2,2", "--levels", "1"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("1,16,16,324,"));
    for i in 0..2 {
        assert!(dir.path().join(format!("cells_{i:02}.txt")).exists());
        assert!(dir.path().join(format!("cells_{i:02}.pgm")).exists());
    }
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
}

#[test]
fn marked_fraction_follows_psi() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["--example", "4a", "--levels", "1", "--psi", "30"],
        dir.path(),
    );
    assert!(o.status.success());
    let map = std::fs::read_to_string(dir.path().join("cells_01.txt")).unwrap();
    let cells = map.chars().filter(|c| !c.is_whitespace()).count();
    let marked = map.chars().filter(|&c| c == 'B' || c == 'E').count();
    let frac = marked as f64 / cells as f64;
    assert!((frac - 0.3).abs() < 0.02, "{frac}");
}

#[test]
fn output_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["--example", "3", "--case", "1,1", "--levels", "1"];
    assert!(run(&args, a.path()).status.success());
    assert!(run(&args, b.path()).status.success());
    assert_eq!(stable_csv(a.path()), stable_csv(b.path()));
    for f in ["cells_00.txt", "cells_01.txt"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn adaptive_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["--example", "5", "--adaptive", "--steps", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stable_csv(dir.path()).len(), 3);
}

#[test]
fn advection_rows_leave_exact_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["--example", "7", "--case", "4,4", "--levels", "0"],
        dir.path(),
    );
    assert!(o.status.success());
    let row = &stable_csv(dir.path())[1];
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[0], "0");
    assert!(cols[8].is_empty() && cols[9].is_empty(), "{row}");
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--example", "9"],
        vec!["--example", "1", "--case", "0,1"],
        vec!["--example", "1", "--psi", "150"],
    ] {
        let o = run(&args, dir.path());
        assert!(!o.status.success(), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.starts_with("error: "), "{err}");
    }
}
