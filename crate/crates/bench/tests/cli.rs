use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use grc_bench::sweep::{read_csv, HEADER};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).output().expect("binary runs")
}

fn sweep_to(path: &Path) -> Output {
    bench(&[
        "sweep",
        "--mode",
        "runtime_vs_dinf",
        "--dkl",
        "2",
        "--dinf",
        "3,4,+3",
        "--seeds",
        "150",
        "--seed-base",
        "11",
        "--out",
        path.to_str().unwrap(),
    ])
}

#[test]
fn sweep_output_is_deterministic_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(sweep_to(&a).status.success());
    assert!(sweep_to(&b).status.success());
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());

    let table = read_csv(bytes.as_slice()).unwrap();
    assert_eq!(table.rows.len(), 3 * 3);
    for row in &table.rows {
        assert_eq!(row.len(), HEADER.len());
        assert_eq!(table.get(row, "n"), "150");
        assert_eq!(table.get(row, "mode"), "runtime_vs_dinf");
    }
    let dinfs: Vec<f64> = table.rows.iter().map(|r| table.number(r, "dinf_target").unwrap()).collect();
    assert_eq!(dinfs, [3.0, 3.0, 3.0, 4.0, 4.0, 4.0, 5.0, 5.0, 5.0]);
}

#[test]
fn plots_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("runtime.csv");
    assert!(sweep_to(&csv).status.success());
    let (p1, p2) = (dir.path().join("p1"), dir.path().join("p2"));
    for p in [&p1, &p2] {
        let out = bench(&["plot", csv.to_str().unwrap(), "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&p1).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.iter().any(|n| n.to_string_lossy().ends_with(".gp")));
    assert!(names.iter().filter(|n| n.to_string_lossy().ends_with(".dat")).count() >= 6);
    for n in &names {
        assert_eq!(fs::read(p1.join(n)).unwrap(), fs::read(p2.join(n)).unwrap(), "{n:?}");
    }
}

#[test]
fn plotting_an_empty_csv_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, "").unwrap();
    let out = bench(&["plot", csv.to_str().unwrap(), "--out", dir.path().join("p").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed sweep CSV"));

    fs::write(&csv, HEADER.join(",") + "\n").unwrap();
    let out = bench(&["plot", csv.to_str().unwrap(), "--out", dir.path().join("p").to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no data rows"));
}

#[test]
fn too_few_seeds_are_rejected() {
    let out = bench(&["sweep", "--dkl", "1", "--dinf", "3", "--seeds", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least"));
}

#[test]
fn checked_codelength_sweep_passes() {
    let out = bench(&[
        "sweep", "--mode", "codelength_vs_dkl", "--dkl", "1,3", "--dinf", "+2", "--variants", "GRCS,GRCD",
        "--seeds", "400", "--check",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn vector_command_writes_one_row_per_lane() {
    let out = bench(&["vector", "--dims", "5", "--calibration", "200", "--vectors", "50", "--check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("lane,dkl,exponent"));
}
