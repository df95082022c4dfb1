use std::path::Path;
use std::process::Command;

use dlra_core::linalg::DenseMatrix;
use dlra_core::msc::Solver;
use dlra_core::synth::{MscInstance, MscParams};
use dlra_tools::io::{read_matrix_csv, write_matrix_csv};

fn run(bin: &str, args: &[&str]) -> std::process::Output {
    let out = Command::new(bin).args(args).output().unwrap();
    assert!(out.status.success(), "{bin} {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn msc_solve_recovers_noiseless_instance() {
    let p = MscParams { n: 20, m: 15, d: 30, k: 2, r: 3, cond: 2.0, snr_db: f64::INFINITY, nonneg: false };
    let inst = MscInstance::generate(&p, 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let [y, d, b, x] = ["y.csv", "d.csv", "b.csv", "x.csv"].map(|f| dir.path().join(f));
    write_matrix_csv(&y, &inst.y).unwrap();
    // Rescaled atoms: the solver normalizes them and the codes must follow.
    let scaled = inst.dict.matrix().scale(3.0);
    write_matrix_csv(&d, &scaled).unwrap();
    write_matrix_csv(&b, &inst.mixing).unwrap();
    let solver = Solver::TrickOmp.name();
    run(env!("CARGO_BIN_EXE_msc"), &[
        "solve", "--data", path(&y), "--dict", path(&d), "--mixing", path(&b),
        "--solver", solver, "--k", "2", "--out", path(&x),
    ]);
    let est = read_matrix_csv(&x).unwrap();
    let truth = inst.codes.values().scale(1.0 / 3.0);
    assert_eq!(est.shape(), truth.shape());
    assert!(est.sub(&truth).frobenius() <= 1e-6 * truth.frobenius());
}

#[test]
fn msc_bench_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    run(env!("CARGO_BIN_EXE_msc"), &[
        "bench", "noise_sweep", "--out", path(dir.path()), "--seed", "2",
        "--set", "n_instances=1", "--set", "snr_db=20", "--set", "alpha=1e-3", "--set", "max_iter=50",
    ]);
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    let meta = std::fs::read_to_string(dir.path().join("run_meta.txt")).unwrap();
    assert!(meta.contains("seed"));
}

#[test]
fn msc_rejects_unknown_test() {
    let out = Command::new(env!("CARGO_BIN_EXE_msc")).args(["bench", "nope"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn dlra_run_and_complete() {
    let p = MscParams { n: 16, m: 12, d: 24, k: 2, r: 2, cond: 2.0, snr_db: f64::INFINITY, nonneg: false };
    let inst = MscInstance::generate(&p, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (y, d, mask) = (dir.path().join("y.csv"), dir.path().join("d.csv"), dir.path().join("mask.txt"));
    write_matrix_csv(&y, &inst.y).unwrap();
    write_matrix_csv(&d, inst.dict.matrix()).unwrap();
    std::fs::write(&mask, "3\n10\n").unwrap();

    let fit = dir.path().join("fit");
    run(env!("CARGO_BIN_EXE_dlra"), &[
        "run", "--model", "dmf", "--data", path(&y), "--dict", path(&d), "--rank", "2", "--k", "2",
        "--iters", "20", "--out", path(&fit),
    ]);
    let x = read_matrix_csv(&fit.join("x.csv")).unwrap();
    assert_eq!(x.shape(), (24, 2));
    for j in 0..2 {
        assert!(x.column(j).iter().filter(|v| **v != 0.0).count() <= 2);
    }
    assert!(fit.join("report.txt").is_file());

    let comp = dir.path().join("comp");
    run(env!("CARGO_BIN_EXE_dlra"), &[
        "complete", "--data", path(&y), "--mask", path(&mask), "--dict", path(&d), "--rank", "2", "--k", "2",
        "--iters", "20", "--init", "random", "--out", path(&comp),
    ]);
    let filled: DenseMatrix = read_matrix_csv(&comp.join("completed.csv")).unwrap();
    assert_eq!(filled.shape(), inst.y.shape());
    assert!(filled.as_slice().iter().all(|v| v.is_finite()));
}
