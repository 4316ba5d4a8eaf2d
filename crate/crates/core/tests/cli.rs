use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qres() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qres"))
}

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../samples").join(name)
}

fn run(args: &[&str]) -> Output {
    qres().args(args).env_remove("QRES_MAX_DEGREE").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn classify_examples() {
    let o = run(&["classify", sample("five_two.json").to_str().unwrap(), "--char", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("cyclic 1/5(2,1), tame for p=2, faithful rays {1,2}"));

    let o = run(&["classify", sample("smooth.json").to_str().unwrap()]);
    assert!(stdout(&o).contains("trivial group"));

    let o = run(&["classify", sample("non_primitive.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not primitive"));
}

#[test]
fn parse_errors_report_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"rank\": 2,\n  \"rays\": [[1, 0] [0, 1]]}\n").unwrap();
    let o = run(&["classify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn resolve_writes_replayable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let input = sample("five_two.json");
    let o = run(&[
        "resolve",
        input.to_str().unwrap(),
        "--oracle-check",
        "--emit-trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("resolved in 2 step(s)"));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().last().unwrap().contains("\"smooth\":true"));

    let o = run(&["replay", input.to_str().unwrap(), trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let forged = dir.path().join("forged.jsonl");
    std::fs::write(&forged, text.replacen("\"center\":[\"0\",\"1\"]", "\"center\":[\"1\",\"1\"]", 1).replacen(
        "\"added_rays\":[[\"0\",\"1\"]]",
        "\"added_rays\":[[\"1\",\"1\"]]",
        1,
    ))
    .unwrap();
    let o = run(&["replay", input.to_str().unwrap(), forged.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("replay error"));
}

#[test]
fn resolve_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = sample("two_cones.json");
    let mut traces = Vec::new();
    for i in 0..2 {
        let t = dir.path().join(format!("t{i}.jsonl"));
        let o = run(&["resolve", input.to_str().unwrap(), "--emit-trace", t.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        traces.push((stdout(&o), std::fs::read(&t).unwrap()));
    }
    assert_eq!(traces[0], traces[1]);
    assert!(traces[0].0.contains("non-tame"));
}

#[test]
fn resolve_failures() {
    let o = run(&["resolve", "--type", "1/6(2,3)"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no faithful divisor"));

    let o = run(&["resolve", sample("six_two_three_one.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no faithful divisor"));
    assert!(stderr(&o).contains("<(-2,-3,6),(0,1,0),(1,0,0)>"));

    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    let o = run(&["resolve", sample("smooth.json").to_str().unwrap(), "--emit-trace", t.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&t).unwrap().lines().count(), 2);
}

#[test]
fn tools() {
    assert_eq!(stdout(&run(&["hj", "5", "2"])), "[3,2]\n");
    assert_eq!(stdout(&run(&["hilbert", "1/3(1,1)", "--bound", "3"])), "x^3, x^2*y, x*y^2, y^3\n");
    assert_eq!(stdout(&run(&["cartify", "1/6(2,3,1)", "--ray", "1"])), "1/2(0,1,1)\n");
    let o = run(&["blowup", "--type", "1/5(2,1)"]);
    assert!(stdout(&o).contains("charts: 1/2(1,1), smooth"));
    let o = run(&["hj", "6", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn glue_check_is_seeded() {
    let a = run(&["--json", "glue-check", "1/5(2,1)", "--samples", "20", "--seed", "9"]);
    let b = run(&["--json", "glue-check", "1/5(2,1)", "--samples", "20", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["passed"], 20);
    assert_eq!(v["truncation"], 12);
}

#[test]
fn degree_bound_from_environment() {
    let o = qres()
        .args(["--json", "hilbert", "1/3(1,1)"])
        .env("QRES_MAX_DEGREE", "2")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["bound"], 2);
    assert_eq!(v["generators"].as_array().unwrap().len(), 0);
}
