//! Exit-code contract and output shape of every subcommand.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_allowseq"));
    c.env_remove("ALLOWSEQ_MAX_CELLS");
    c
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn scratch(name: &str) -> PathBuf {
    static N: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!("allowseq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(format!("{}-{name}", N.fetch_add(1, Ordering::Relaxed)))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn construct_and_verify(args: &[&str], expect_construct: i32) {
    let out = scratch("c.trace");
    let mut full = vec!["construct"];
    full.extend_from_slice(args);
    full.extend(["-o", out.to_str().unwrap()]);
    let o = run(&full);
    assert_eq!(code(&o), expect_construct, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    let v = run(&["verify", out.to_str().unwrap()]);
    assert_eq!(code(&v), 0, "{args:?}");
    let v = run(&["verify", "--strict", out.to_str().unwrap()]);
    assert_eq!(code(&v), 0, "{args:?}: {}", stdout(&v));
}

#[test]
fn construct_outputs_verify() {
    for t in ["0", "1", "2"] {
        construct_and_verify(&["--stage", "shift", "--t", t], 0);
        construct_and_verify(&["--stage", "reflect", "--t", t, "--x-len", "2"], 0);
    }
    construct_and_verify(&["--stage", "shift", "--t", "1", "--b-len", "14"], 0);
    construct_and_verify(&["--stage", "step", "--t", "0", "--k", "0"], 0);
    construct_and_verify(&["--stage", "step", "--t", "1", "--k", "0"], 0);
    // t = 0 steps above level 0 miss the |B-| certificate but stay valid
    construct_and_verify(&["--stage", "step", "--t", "0", "--k", "1"], 1);
}

#[test]
fn shift_summary() {
    let out = scratch("s.trace");
    let o = run(&["--machine", "construct", "--stage", "shift", "--t", "1", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    for key in ["b_len=9", "allowable=yes", "valid=yes", "cells=", "flips=", "min_deviation=", "wall_ms="] {
        assert!(s.contains(key), "{key} missing in {s}");
    }
}

#[test]
fn full_construction_reports_balance_failure() {
    let o = run(&["--machine", "construct", "--stage", "full", "--t", "0", "--d", "9", "--k", "1"]);
    assert_eq!(code(&o), 1);
    let s = stdout(&o);
    assert!(s.contains("status=failed"));
    assert!(s.contains("failed_stage=balance"));
    assert!(s.contains("planned_ratio=3/38"));
    assert!(s.contains("required_ratio=4"));
}

#[test]
fn full_plan_certifies_default_constants() {
    for t in ["0", "1", "2"] {
        let o = run(&["construct", "--stage", "full", "--t", t, "--plan"]);
        assert_eq!(code(&o), 0, "t={t}");
        assert!(stdout(&o).contains("certified true"));
    }
    let o = run(&["construct", "--stage", "full", "--t", "0", "--d", "9", "--k", "1", "--plan"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("certified false"));
}

#[test]
fn refusals_exit_3() {
    let o = run(&["construct", "--stage", "full", "--t", "0", "--d", "100", "--k", "100"]);
    assert_eq!(code(&o), 3);
    let o = run(&["construct", "--stage", "step", "--t", "1", "--k", "1", "--max-cells", "1000"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cells"));
    let o = bin()
        .args(["construct", "--stage", "step", "--t", "1", "--k", "1"])
        .env("ALLOWSEQ_MAX_CELLS", "1000")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    let o = run(&["search", "--n", "9"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn bad_input_exits_2() {
    let o = run(&["construct", "--stage", "step", "--t", "1", "--d", "10"]);
    assert_eq!(code(&o), 2);
    let o = run(&["construct", "--stage", "step", "--t", "1", "--d", "10", "--plan", "--unchecked"]);
    assert_eq!(code(&o), 0);
    let o = run(&["verify", data("truncated.trace").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));
    let o = run(&["verify", "/nonexistent/file.trace"]);
    assert_eq!(code(&o), 2);
    let o = run(&["points", "--action", "link", data("collinear.pts").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = run(&["construct", "--stage", "sideways"]);
    assert_eq!(code(&o), 2);
    let o = run(&["--machine", "verify", data("square.pts").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("exit=2"));
}

#[test]
fn five_example_verifies_but_not_strictly() {
    let p = data("example5.trace");
    let o = run(&["verify", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("allowable: yes"));
    assert!(s.contains("reversal: yes"));
    assert!(s.contains("min_deviation: 0"));
    let o = run(&["verify", "--strict", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn disallowed_trace_exits_1() {
    let p = scratch("bad.trace");
    std::fs::write(&p, "ALLOWSEQ v1\nt=0 lo=1 hi=3\n1 2 3\nF 1 2\nF 1 2\n").unwrap();
    let o = run(&["verify", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("NotIncreasing"));
}

#[test]
fn search_output() {
    let o = run(&["search", "--n", "3"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("best: 1/2"));
    assert!(s.contains("3 1/2 6\nALLOWSEQ v1\n"));
    let out = scratch("n4.txt");
    let o = run(&["search", "--n", "4", "--mode", "multi", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/search_n4.txt");
    assert_eq!(std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(golden).unwrap());
}

#[test]
fn points_actions() {
    let o = run(&["points", "--action", "imbalance", data("square.pts").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("minimum: 0"));
    let o = run(&["--machine", "points", "--action", "imbalance", data("triangle.pts").to_str().unwrap()]);
    assert!(stdout(&o).contains("minimum=1"));
    let o = run(&["--machine", "points", "--action", "link", data("pentagon.pts").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("link=holds"));
    // diagonals split 1 against 2, sides 0 against 3
    assert!(s.contains("min_imbalance=1"));
    assert!(s.contains("min_deviation=1/2"));
    let o = run(&["points", "--action", "sequence", data("triangle.pts").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("event_3"));
}

#[test]
fn render_svg() {
    let out = scratch("r.svg");
    let o = run(&["render", data("example5.trace").to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 5);
    let o = run(&["render", "--lines", data("square.pts").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).matches("<circle").count(), 4);
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&run(&["--help"])), 0);
}
