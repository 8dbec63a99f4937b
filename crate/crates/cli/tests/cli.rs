use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn suite() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../suites/mini-strings")
}

fn sprout(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sprout"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_example() {
    let grammar = fixture("arith.herbg");
    let problem = fixture("double-plus-one.problem.json");
    let out = sprout(&[
        "solve",
        "--grammar",
        grammar.to_str().unwrap(),
        "--problem",
        problem.to_str().unwrap(),
        "--iterator",
        "bfs",
        "--max-depth",
        "5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("flag: optimal_program"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("program: ")));
    assert!(text
        .lines()
        .any(|l| l.starts_with("expression: ") && l.contains('x')));
}

#[test]
fn solve_contradictory_is_suboptimal() {
    let grammar = fixture("arith.herbg");
    let problem = fixture("contradictory.problem.json");
    let out = sprout(&[
        "solve",
        "--grammar",
        grammar.to_str().unwrap(),
        "--problem",
        problem.to_str().unwrap(),
        "--max-depth",
        "2",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("flag: suboptimal_program"));
}

#[test]
fn configuration_errors_exit_nonzero() {
    let grammar = fixture("arith.herbg");
    let problem = fixture("double-plus-one.problem.json");
    let g = grammar.to_str().unwrap();
    let p = problem.to_str().unwrap();
    let missing = sprout(&[
        "solve",
        "--grammar",
        "/nonexistent.herbg",
        "--problem",
        p,
        "--max-depth",
        "2",
    ]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent.herbg"));
    assert!(!sprout(&[
        "solve",
        "--grammar",
        g,
        "--problem",
        p,
        "--iterator",
        "astar"
    ])
    .status
    .success());
    assert!(
        !sprout(&["solve", "--grammar", g, "--problem", p, "--bogus"])
            .status
            .success()
    );
    // recursive grammar without any bound
    assert!(!sprout(&["solve", "--grammar", g, "--problem", p])
        .status
        .success());
    let broken = fixture("broken.problem.json");
    let out = sprout(&[
        "solve",
        "--grammar",
        g,
        "--problem",
        broken.to_str().unwrap(),
        "--max-depth",
        "2",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.problem.json"));
    let suite = suite();
    assert!(!sprout(&[
        "bench",
        "--suite",
        suite.to_str().unwrap(),
        "--synthesizer",
        "genetic"
    ])
    .status
    .success());
}

#[test]
fn enumerate_prints_programs() {
    let grammar = fixture("arith.herbg");
    let out = sprout(&[
        "enumerate",
        "--grammar",
        grammar.to_str().unwrap(),
        "--start",
        "Int",
        "--max-depth",
        "2",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 21);
    assert_eq!(&lines[..3], ["1", "2", "3"]);
    let limited = sprout(&[
        "enumerate",
        "--grammar",
        grammar.to_str().unwrap(),
        "--start",
        "Int",
        "--limit",
        "4",
    ]);
    assert_eq!(stdout(&limited).lines().count(), 4);
}

#[test]
fn bench_writes_consistent_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let suite = suite();
    let out = sprout(&[
        "bench",
        "--suite",
        suite.to_str().unwrap(),
        "--synthesizer",
        "probe",
        "--cycles",
        "3",
        "--max-depth",
        "5",
        "--timeout",
        "10",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let problems = json["problems"].as_array().unwrap();
    assert_eq!(problems.len(), 10);
    assert_eq!(json["total"], 10);
    let optimal = problems
        .iter()
        .filter(|p| p["flag"] == "optimal_program")
        .count();
    assert_eq!(json["solved_problems"], optimal as u64);
    for key in [
        "name",
        "solved",
        "flag",
        "wall_time_seconds",
        "enumerated",
        "program",
    ] {
        assert!(problems[0].get(key).is_some(), "missing {key}");
    }
    let last = stdout(&out).lines().last().unwrap().to_owned();
    assert_eq!(last, format!("solved {optimal}/10"));
}

#[test]
fn bench_zero_timeout() {
    let suite = suite();
    let out = sprout(&[
        "bench",
        "--suite",
        suite.to_str().unwrap(),
        "--max-depth",
        "5",
        "--timeout",
        "0",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).ends_with("solved 0/10\n"));
}
