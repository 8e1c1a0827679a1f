//! Subprocess tests of the `fks` binary: artifact layout, exit codes,
//! determinism across worker counts, and the diff/report verbs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fks::cases::{CaseConfig, CaseId};
use fks::dump::{read_binary_dump, read_text_dump, write_text_dump};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fks"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn dir_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn simulate_is_bytewise_deterministic_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.ini",
        "# smoke run\n[case]\nid = custom\n[time]\nt_final = 0.2\n[output]\ndump_every = 10\nbinary = true\n",
    );
    let out1 = tmp.path().join("w1");
    let out2 = tmp.path().join("w2");
    let r1 = run(&["simulate", &cfg, "--output-dir", out1.to_str().unwrap(), "--workers", "1"]);
    let r2 = run(&["simulate", &cfg, "--output-dir", out2.to_str().unwrap(), "--workers", "2"]);
    assert!(r1.status.success(), "{}", String::from_utf8_lossy(&r1.stderr));
    assert!(r2.status.success(), "{}", String::from_utf8_lossy(&r2.stderr));

    let stdout = String::from_utf8(r1.stdout).unwrap();
    assert!(stdout.contains("case=custom steps="), "summary line missing: {stdout}");

    let names = dir_files(&out1);
    assert_eq!(names, dir_files(&out2));
    assert!(names.contains(&"macro_000000.txt".to_string()));
    assert!(names.contains(&"f_000000.bin".to_string()));
    assert!(names.contains(&"diagnostics.csv".to_string()));
    for name in &names {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between worker counts");
    }

    let csv = fs::read_to_string(out1.join("diagnostics.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "step,t,dt,mass,momentum_x,momentum_y,momentum_z,energy,rho_max,exchange"
    );
    assert!(csv.lines().count() > 1);
}

#[test]
fn zero_length_run_still_dumps_the_initial_state() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "frozen.ini",
        "[case]\nid = vortex2d\n[time]\nt_final = 0\n",
    );
    let out = tmp.path().join("out");
    let r = run(&["simulate", &cfg, "--output-dir", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let stdout = String::from_utf8(r.stdout).unwrap();
    assert!(stdout.contains("steps=0"), "expected a zero-step run: {stdout}");

    let (_, rows) = read_text_dump(&out.join("macro_000000.txt")).unwrap();
    assert_eq!(rows.len(), 10_000, "one row per fluid cell of the 100x100 grid");
}

#[test]
fn config_errors_exit_with_code_three() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_key = write_config(
        tmp.path(),
        "bad_key.ini",
        "[case]\nid = custom\n[output]\nbinary_dumps = true\n",
    );
    let r = run(&["simulate", &bad_key]);
    assert_eq!(r.status.code(), Some(3));
    let err = String::from_utf8(r.stderr).unwrap();
    assert!(err.contains("unknown key"), "stderr: {err}");

    let good = write_config(tmp.path(), "good.ini", "[case]\nid = custom\n[time]\nt_final = 0\n");
    let neither = run(&["simulate"]);
    assert_eq!(neither.status.code(), Some(3));
    let both = run(&["simulate", &good, "--config", &good]);
    assert_eq!(both.status.code(), Some(3));

    let unknown_case = write_config(tmp.path(), "case.ini", "[case]\nid = warp9\n");
    let r = run(&["simulate", &unknown_case]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn unstable_run_exits_with_code_two_and_finite_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    // dt far beyond the relaxation bound makes the very first forward-Euler
    // collision update overshoot and trip the in-step audit.
    let cfg = write_config(
        tmp.path(),
        "blowup.ini",
        "[case]\nid = custom\n[model]\ntau = 1e-4\n[time]\ndt = 1.0\nt_final = 5\n[output]\nbinary = true\n",
    );
    let out = tmp.path().join("out");
    let r = run(&["simulate", &cfg, "--output-dir", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&r.stderr));

    let mut checked = 0;
    for name in dir_files(&out) {
        let path = out.join(&name);
        if name.ends_with(".txt") {
            let (_, rows) = read_text_dump(&path).unwrap();
            for row in rows {
                assert!(row.rho.is_finite() && row.temp.is_finite(), "{name} holds non-finite values");
                assert!(row.u.iter().all(|x| x.is_finite()));
            }
            checked += 1;
        } else if name.ends_with(".bin") {
            let (_, field) = read_binary_dump(&path).unwrap();
            assert!(field.iter().all(|x| x.is_finite()), "{name} holds non-finite values");
            checked += 1;
        }
    }
    assert!(checked >= 2, "expected dumps to be written even on abort");
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn diff_of_identical_dumps_is_exactly_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let solver = CaseConfig::preset(CaseId::Custom).build().unwrap();
    let dump = tmp.path().join("macro_000000.txt");
    write_text_dump(&dump, &solver, "custom", 0).unwrap();

    let r = run(&["diff", dump.to_str().unwrap(), dump.to_str().unwrap()]);
    assert!(r.status.success());
    let line = String::from_utf8(r.stdout).unwrap();
    assert_eq!(line.trim(), "L1 0.0000000000e0  L2 0.0000000000e0  Linf 0.0000000000e0");
}

#[test]
fn diff_rejects_mismatched_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let a_path = tmp.path().join("a.txt");
    let b_path = tmp.path().join("b.txt");
    let a = CaseConfig::preset(CaseId::Custom).build().unwrap();
    write_text_dump(&a_path, &a, "custom", 0).unwrap();
    let mut small = CaseConfig::preset(CaseId::Custom);
    small.m = [16, 16, 1];
    let b = small.build().unwrap();
    write_text_dump(&b_path, &b, "custom", 0).unwrap();

    let r = run(&["diff", a_path.to_str().unwrap(), b_path.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn relaxation_series_report_matches_the_exact_solution() {
    let tmp = tempfile::tempdir().unwrap();
    // Coarse lattice keeps this quick; the reported error at t=10 should sit
    // near the reference accuracy for a 16^2 run.
    let cfg = write_config(
        tmp.path(),
        "relax.ini",
        "[case]\nid = bkw2d\n[velocity]\nn = 16\nbound = 6\n[output]\ndump_every = 250\nbinary = true\n",
    );
    let out = tmp.path().join("series");
    let r = run(&["simulate", &cfg, "--output-dir", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let rep = run(&["report-bkw", out.to_str().unwrap()]);
    assert!(rep.status.success(), "{}", String::from_utf8_lossy(&rep.stderr));
    let text = String::from_utf8(rep.stdout).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("t=10.000000"), "unexpected final line: {last}");
    let l1: f64 = last
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("L1=").map(|v| v.parse().unwrap()))
        .unwrap();
    assert!(l1 > 5.7e-4 / 4.0 && l1 < 5.7e-4 * 2.0, "t=10 error off the reference: {l1:.3e}");
}

#[test]
fn collision_bench_reports_a_parsable_median() {
    let r = run(&["bench-collision", "--dv", "2", "--n", "8", "--angles", "4", "--reps", "5"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let line = String::from_utf8(r.stdout).unwrap();
    assert!(line.starts_with("dv=2 n=8 angles=4x1 reps=5 median_us="), "line: {line}");
    let median: f64 = line.trim().rsplit('=').next().unwrap().parse().unwrap();
    assert!(median > 0.0);
}
