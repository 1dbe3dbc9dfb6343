//! End-to-end tests of the command line driver on tiny studies.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fracext-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracext"))
        .args(args)
        .output()
        .expect("driver binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const HEADER: &str = "level,h,p,L,Y,n_modes,ndof_fem,ndof_bem,energy,energy_err,l2_err,eoc_energy,eoc_l2";

#[test]
fn help_lists_the_flags() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    for flag in ["--beta", "--sigma", "--levels", "--Y-override", "--samples"] {
        assert!(text.contains(flag), "help misses {flag}");
    }
}

#[test]
fn missing_beta_is_reported() {
    let out = run(&[]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("beta"));
}

#[test]
fn tiny_study_prints_and_writes_the_same_csv() {
    let dir = scratch_dir("out");
    let csv_path = dir.join("study.csv");
    let out = run(&[
        "--beta",
        "0.5",
        "--s",
        "1",
        "--levels",
        "0",
        "--p-override",
        "2",
        "--Y-override",
        "2.0",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.starts_with(HEADER));
    assert_eq!(text.lines().count(), 2, "one header and one record");
    assert_eq!(fs::read_to_string(&csv_path).unwrap(), text);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let dir = scratch_dir("cfg");
    let cfg = dir.join("study.cfg");
    fs::write(
        &cfg,
        "# tiny setup\nbeta = 0.5\ns = 1\nlevels = 1\np-override = 2\nY-override = 2.0\n",
    )
    .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "--levels", "0"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert_eq!(text.lines().count(), 2, "flag --levels 0 overrides levels = 1");
    assert!(text.lines().nth(1).unwrap().starts_with("0,"));

    let bad = dir.join("bad.cfg");
    fs::write(&bad, "volume = 11\n").unwrap();
    let out = run(&["--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("unknown key"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn sample_points_add_a_trace_block() {
    let dir = scratch_dir("samples");
    let pts = dir.join("probes.txt");
    fs::write(&pts, "0.0 0.0\n# origin above\n0.5 0.25\n").unwrap();
    let out = run(&[
        "--beta",
        "0.5",
        "--levels",
        "0",
        "--p-override",
        "2",
        "--Y-override",
        "2.0",
        "--samples",
        pts.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("\n\nx,y,level0\n"), "sample block present");
    assert_eq!(text.lines().count(), 2 + 1 + 3, "csv, blank, sample header, two rows");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_choices_are_rejected() {
    let out = run(&["--beta", "0.5", "--source", "wiggle"]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("wiggle"));

    let out = run(&["--beta", "0.5", "--domain", "square:-1"]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("side"));

    let out = run(&["--beta", "0.5", "--domain", "/no/such/vertices.txt"]);
    assert!(!out.status.success());
}
