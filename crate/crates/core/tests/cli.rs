use std::path::Path;
use std::process::{Command, Output};

use opfgap::case_io::read_results;
use opfgap::formulation::Model;

fn opfgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opfgap"))
        .args(args)
        .env("OPFGAP_LOG", "quiet")
        .output()
        .expect("run opfgap")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(": "))
        .unwrap_or_else(|| panic!("no '{key}' in output:\n{text}"))
        .to_string()
}

fn objective(model: &str) -> f64 {
    let o = opfgap(&["solve", "--case", "case9", "--model", model, "--t", "1.0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "status"), "optimal");
    field(&stdout(&o), "objective").parse().unwrap()
}

#[test]
fn sdp2_and_socp_agree() {
    let (a, b) = (objective("sdp2"), objective("socp"));
    assert!((a - b).abs() <= 1e-5 * b.abs(), "sdp2 {a} socp {b}");
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = opfgap(&[
        "sweep", "--case", "case9", "--models", "ac,socp", "--t-start", "0.8", "--t-end", "1.2", "--step", "0.1",
        "--no-timing", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("accurate"));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let records = read_results(&csv).unwrap();
    let ts = [0.8, 0.9, 1.0, 1.1, 1.2];
    assert_eq!(records.len(), 2 * ts.len());
    for t in ts {
        for m in [Model::Ac, Model::Socp] {
            assert!(records.iter().any(|r| (r.t - t).abs() < 1e-9 && r.model == m), "missing ({t}, {m})");
        }
    }
    assert!(records.iter().all(|r| r.solve_time_s.is_none()));
    assert!(out.join("transitions.txt").exists());

    let plots = dir.path().join("plots");
    let report = |dest: &Path| {
        let o = opfgap(&[
            "report", "--csv", out.join("results.csv").to_str().unwrap(), "--plot", "gap,cost", "--out",
            dest.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    report(&plots);
    let gap = std::fs::read_to_string(plots.join("gap.svg")).unwrap();
    assert!(gap.starts_with("<svg") || gap.starts_with("<?xml"));
    assert!(gap.contains("series-socp"));
    assert!(!gap.contains("series-ac\""));
    let cost = std::fs::read_to_string(plots.join("cost.svg")).unwrap();
    assert!(cost.contains("series-ac") && cost.contains("series-socp"));

    let again = dir.path().join("again");
    report(&again);
    assert_eq!(std::fs::read(plots.join("gap.svg")).unwrap(), std::fs::read(again.join("gap.svg")).unwrap());
}

#[test]
fn solve_writes_a_dispatch_that_loadflow_accepts() {
    let dir = tempfile::tempdir().unwrap();
    let disp = dir.path().join("dispatch.csv");
    let o = opfgap(&["solve", "--case", "case9", "--model", "socp", "--dispatch", disp.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&disp).unwrap();
    assert!(text.starts_with("gen_id,pg_mw"));
    let o = opfgap(&["loadflow", "--case", "case9", "--dispatch", disp.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(field(&s, "status"), "optimal");
    let residual: f64 = field(&s, "max_residual").parse().unwrap();
    assert!(residual <= 1e-6);
}

#[test]
fn non_convergence_inside_a_sweep_is_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = opfgap(&[
        "sweep", "--case", "case9", "--models", "socp", "--t-start", "3", "--t-end", "3", "--no-timing", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("relax_infeasible"));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.contains(",socp,infeasible,"));
}

#[test]
fn usage_errors_exit_2() {
    let o = opfgap(&["solve", "--case", "case9", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--frobnicate"));
    let o = opfgap(&["transmogrify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("transmogrify"));
    let o = Command::new(env!("CARGO_BIN_EXE_opfgap"))
        .args(["solve", "--case", "case9"])
        .env("OPFGAP_LOG", "loud")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("loud"));
}

#[test]
fn input_errors_exit_3() {
    let o = opfgap(&["solve", "--case", "/no/such/case.m"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("/no/such/case.m"));
    let o = opfgap(&["solve", "--case", "case9", "--model", "dc"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("dc"));
    let o = opfgap(&["sweep", "--case", "case9", "--t-start", "2", "--t-end", "1", "--out", "/tmp/opfgap-never"]);
    assert_eq!(o.status.code(), Some(3));
    let o = opfgap(&["report", "--csv", "/no/such/results.csv", "--plot", "gap"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("/no/such/results.csv"));
}

#[test]
fn help_succeeds() {
    let o = opfgap(&["--help"]);
    assert!(o.status.success());
    for cmd in ["solve", "sweep", "loadflow", "report"] {
        assert!(stdout(&o).contains(cmd));
    }
}
