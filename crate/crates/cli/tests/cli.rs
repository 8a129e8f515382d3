use std::path::PathBuf;
use std::process::Command;

use contextual::globalfit::Verdict;
use contextual::scenario::builtin_abc;
use contextual::simulator::LogRecord;
use contextual_cli::report::Report;
use contextual_cli::simulate::SimulationReport;

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_contextual"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("contextual-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn analyze_abc_is_noncontextual() {
    let (out, _, code) = run(&["analyze", "--builtin", "abc", "--p", "0.3333"]);
    assert_eq!(code, 0);
    assert!(out.contains("verdict: GloballyNoncontextual"));
}

#[test]
fn analyze_chsh_singlet_is_contextual_with_witness() {
    let (out, _, code) = run(&["analyze", "--builtin", "chsh", "--state", "singlet"]);
    assert_eq!(code, 3);
    assert!(out.contains("verdict: GloballyContextual"));
    assert!(out.contains("CHSH value: 2.828427"));
    let (_, _, code) = run(&["analyze", "--builtin", "chsh", "--state", "product00"]);
    assert_eq!(code, 0);
}

#[test]
fn missing_file_is_an_error() {
    let (out, err, code) = run(&["analyze", "missing.json"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("missing.json"));
}

#[test]
fn bad_flags_exit_two() {
    for args in [
        &["analyze", "--builtin", "abc", "--bogus"][..],
        &["analyze", "--builtin", "nope"],
        &["analyze"],
        &["analyze", "--builtin", "abc", "--p", "1.5"],
        &["analyze", "--builtin", "abc", "--state", "singlet"],
        &["analyze", "--builtin", "chsh", "--angles", "0,1,2"],
        &["simulate", "--builtin", "abc", "--runs", "0"],
        &["simulate", "--builtin", "abc", "--handle", "D"],
        &["range", "--builtin", "abc", "--cell", "a1,b=1"],
        &["range", "--builtin", "abc", "--cell", "a=1,b=1,c=-1", "--sweep", "q=0:1:0.1"],
    ] {
        let (_, _, code) = run(args);
        assert_eq!(code, 2, "{args:?}");
    }
}

#[test]
fn json_report_round_trips() {
    for args in [
        &["analyze", "--builtin", "abc", "--json", "--cell", "a=1,b=1,c=-1"][..],
        &["analyze", "--builtin", "chsh", "--json"],
        &["analyze", "--builtin", "chsh", "--json", "--exact"],
    ] {
        let (out, _, _) = run(args);
        let report: Report = serde_json::from_str(&out).unwrap();
        assert!(report.is_consistent());
        let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
        assert_eq!(again, out);
        let reparsed: Report = serde_json::from_str(&again).unwrap();
        assert_eq!(reparsed, report);
    }
    let (out, _, _) = run(&["analyze", "--builtin", "chsh", "--json"]);
    let report: Report = serde_json::from_str(&out).unwrap();
    assert_eq!(report.verdict, Verdict::GloballyContextual);
    let w = report.witness.unwrap();
    assert!((w.chsh_value.unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    assert!(!report.notes.is_empty());
    assert_eq!(report.tolerances.feasibility, 1e-9);
}

#[test]
fn analyze_reports_cell_range() {
    let (out, _, _) = run(&["analyze", "--builtin", "abc", "--json", "--cell", "a=1,b=1,c=-1"]);
    let report: Report = serde_json::from_str(&out).unwrap();
    let r = &report.ranges[0];
    assert!(r.min.abs() < 1e-8 && (r.max - 1.0 / 3.0).abs() < 1e-8);
}

#[test]
fn range_outputs() {
    let (out, _, code) = run(&["range", "--builtin", "abc", "--cell", "a=1,b=1,c=-1"]);
    assert_eq!((out.as_str(), code), ("0 0.333333\n", 0));
    let (out, _, code) = run(&["range", "--builtin", "abc", "--p", "1", "--cell", "a=1,b=-1,c=1"]);
    assert_eq!((out.as_str(), code), ("0 0\n", 0));
    let (out, _, code) = run(&["range", "--builtin", "abc", "--exact", "--cell", "A=1,B=1,C=-1"]);
    assert_eq!((out.as_str(), code), ("0 0.333333\n", 0));
    let (out, _, code) = run(&["range", "--builtin", "chsh", "--cell", "A=1,A'=1,B=1,B'=1"]);
    assert_eq!(code, 3);
    assert!(out.contains("no global distribution"));
    let (_, err, code) = run(&["range", "--builtin", "abc", "--cell", "a=1,b=1,d=1"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown") || err.contains("no value"));
}

#[test]
fn range_sweep_emits_csv() {
    let (out, _, code) = run(&["range", "--builtin", "abc", "--cell", "a=1,b=1,c=-1", "--sweep", "p=0:1:0.1"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "p,min,max");
    assert_eq!(lines.len(), 12);
    for (k, line) in lines[1..].iter().enumerate() {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let p = k as f64 / 10.0;
        assert!((f[0] - p).abs() < 1e-9);
        assert_eq!(f[1], 0.0);
        assert!((f[2] - (1.0 - p) / 2.0).abs() < 1e-6, "{line}");
    }
    let (out, _, code) = run(&["analyze", "--builtin", "abc", "--sweep", "p=0:1:0.5"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 4);
    assert!(out.lines().skip(1).all(|l| l.contains("GloballyNoncontextual")));
}

#[test]
fn simulate_abc_handle_b() {
    let (out, _, code) = run(&[
        "simulate", "--builtin", "abc", "--p", "0.3333", "--handle", "B", "--runs", "100000", "--seed", "7", "--json",
    ]);
    assert_eq!(code, 0);
    let r: SimulationReport = serde_json::from_str(&out).unwrap();
    for o in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0]] {
        assert!((r.cell(&o).unwrap().frequency - 1.0 / 3.0).abs() < 0.01);
    }
    assert_eq!(r.cell(&[-1.0, -1.0]).unwrap().count, 0);
    let total: u64 = r.cells.iter().map(|c| c.count).sum();
    assert_eq!(total, 100_000);
}

#[test]
fn simulate_pair_and_two_apparatus() {
    let (out, _, _) = run(&["simulate", "--builtin", "abc", "--p", "0.3333", "--handle", "pair", "--runs", "10000", "--seed", "7", "--json"]);
    let r: SimulationReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.primary_agreement, Some(1.0));
    assert!(r.secondary_disagreement.unwrap() > 0.0);

    let (out, _, _) = run(&["simulate", "--builtin", "abc", "--handle", "two-apparatus", "--runs", "100000", "--json"]);
    let r: SimulationReport = serde_json::from_str(&out).unwrap();
    assert_eq!(r.cells.len(), 16);
    for c in &r.cells {
        assert!((c.frequency - c.expected.unwrap()).abs() < 0.01);
    }
}

#[test]
fn simulate_writes_json_lines_log() {
    let log = temp_path("runs.jsonl");
    let log_str = log.to_str().unwrap();
    let (_, _, code) = run(&["simulate", "--builtin", "abc", "--runs", "500", "--seed", "3", "--log", log_str]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&log).unwrap();
    let recs: Vec<LogRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 500);
    assert!(recs.iter().all(|r| r.property == r.pointer1));
    assert_eq!(recs[5].seed, 3 ^ 5);
}

#[test]
fn chsh_simulation_needs_explicit_secondaries() {
    let (_, err, code) = run(&["simulate", "--builtin", "chsh", "--runs", "10"]);
    assert_eq!(code, 1);
    assert!(err.contains('C'));
    let (_, _, code) = run(&["simulate", "--builtin", "chsh", "--runs", "10", "--secondary-c", "B'"]);
    assert_eq!(code, 0);
}

#[test]
fn scenario_files_validate_and_analyze() {
    let path = temp_path("abc.json");
    std::fs::write(&path, builtin_abc(0.2).unwrap().to_json()).unwrap();
    let p = path.to_str().unwrap();
    let (out, _, code) = run(&["validate", p]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("contexts: {A,B} {A,C}"));
    let (_, _, code) = run(&["analyze", p]);
    assert_eq!(code, 0);

    let broken = temp_path("broken.json");
    std::fs::write(&broken, "{\n  \"name\": \"x\",\n  \"dim\": 2,\n").unwrap();
    let (_, err, code) = run(&["validate", broken.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line"), "{err}");
}

#[test]
fn help_and_version_exit_zero() {
    let (out, _, code) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("analyze") && out.contains("simulate"));
    let (out, _, code) = run(&["analyze", "--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("--tol") && out.contains("1e-9"));
    let (out, _, code) = run(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}
