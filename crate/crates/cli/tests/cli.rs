use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qi-lab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn run_is_deterministic_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let args = ["run", "--experiment", "tree-embed", "--r-list", "9,16", "--seed", "4", "--out", path(&out)];
    assert_eq!(code(&qi(&args)), 0);
    let first = fs::read_to_string(&out).unwrap();
    assert_eq!(code(&qi(&args)), 0);
    assert_eq!(first, fs::read_to_string(&out).unwrap());
    let mut lines = first.lines();
    assert!(lines.next().unwrap().starts_with("R,lambda1,c1,lambda2,c2,total"));
    assert_eq!(lines.count(), 2);
    assert!(first.lines().skip(1).all(|l| l.ends_with(",4")));
}

#[test]
fn assert_mode_exit_codes() {
    let pass = qi(&["run", "--experiment", "tree-embed", "--r-list", "9,16,25,36", "--assert"]);
    assert_eq!(code(&pass), 0);
    assert!(String::from_utf8_lossy(&pass.stderr).contains("\"pass\":true"));
    let fail = qi(&["run", "--experiment", "tree-to-h2", "--r-list", "4,5,6,7", "--assert"]);
    assert_eq!(code(&fail), 3);
}

#[test]
fn usage_and_computation_errors() {
    assert_eq!(code(&qi(&["bogus"])), 1);
    assert_eq!(code(&qi(&["run", "--experiment", "tree-embed"])), 1);
    assert_eq!(code(&qi(&["run", "--experiment", "nope", "--r-list", "4"])), 1);
    assert_eq!(code(&qi(&["--help"])), 0);
    let capped = qi(&["space", "--radius", "50", "--mesh", "0.01", "--cap", "1000"]);
    assert_eq!(code(&capped), 2);
    assert!(String::from_utf8_lossy(&capped.stderr).contains("cap"));
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# sweep\nexperiment = vol-growth\nr_list = 3,4\nseed = 9\n").unwrap();
    let out = qi(&["run", "--config", path(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("R,points,covering_count"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",9")));
    let overridden = stdout(&qi(&["run", "--config", path(&cfg), "--seed", "2"]));
    assert!(overridden.lines().skip(1).all(|l| l.ends_with(",2")));
    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&qi(&["run", "--config", path(&cfg)])), 1);
}

#[test]
fn embedding_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (map, dom, cod) = (dir.path().join("map.csv"), dir.path().join("dom.csv"), dir.path().join("cod.csv"));
    let embed = qi(&[
        "embed", "tree-to-h2", "--degree", "3", "--radius", "3",
        "--map-out", path(&map), "--domain-out", path(&dom), "--codomain-out", path(&cod),
    ]);
    assert_eq!(code(&embed), 0, "{}", String::from_utf8_lossy(&embed.stderr));
    let direct: serde_json::Value = serde_json::from_str(stdout(&embed).lines().next().unwrap()).unwrap();
    let measured = qi(&["distort", "measure", "--map", path(&map), "--domain", path(&dom), "--codomain", path(&cod)]);
    assert_eq!(code(&measured), 0, "{}", String::from_utf8_lossy(&measured.stderr));
    let again: serde_json::Value = serde_json::from_str(stdout(&measured).trim()).unwrap();
    for key in ["lambda1", "c1", "lambda2", "c2"] {
        let (a, b) = (direct[key].as_f64().unwrap(), again[key].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{key}: {a} vs {b}");
    }
}

#[test]
fn space_writes_points_and_edges() {
    let dir = tempfile::tempdir().unwrap();
    let (pts, edges) = (dir.path().join("p.csv"), dir.path().join("e.csv"));
    let out = qi(&["space", "--space", "tree", "--degree", "3", "--radius", "2", "--out", path(&pts), "--edges", path(&edges)]);
    assert_eq!(code(&out), 0);
    let points = fs::read_to_string(&pts).unwrap();
    assert!(points.starts_with("id,kind"));
    assert_eq!(points.lines().count(), 1 + 10);
    assert_eq!(fs::read_to_string(&edges).unwrap().lines().count(), 1 + 9);
}

#[test]
fn fit_reads_run_output() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    assert_eq!(code(&qi(&["run", "--experiment", "tree-embed", "--r-list", "9,16,25,36", "--out", path(&table)])), 0);
    let fit = qi(&["fit", "--input", path(&table), "--x", "R", "--y", "total"]);
    assert_eq!(code(&fit), 0);
    let v: serde_json::Value = serde_json::from_str(stdout(&fit).trim()).unwrap();
    assert_eq!(v["candidates"].as_array().unwrap().len(), 5);
    assert_eq!(code(&qi(&["fit", "--input", path(&table), "--y", "missing"])), 1);
}

#[test]
fn scalar_checks_report_json() {
    let growth: serde_json::Value =
        serde_json::from_str(stdout(&qi(&["sepvol", "growth-bound", "--radius", "1000"])).trim()).unwrap();
    let ratio = growth["c_min_over_R"].as_f64().unwrap();
    assert!((0.4..=0.5).contains(&ratio));
    let conn = stdout(&qi(&["sepvol", "connectivity", "--radius", "100", "--c2", "1"]));
    assert!(conn.contains("\"consistent\":false"));
    let kr = qi(&["boundary", "kr", "--theta", "zmu-identity", "--R-list", "5,10", "--grid-n", "64"]);
    assert_eq!(code(&kr), 0, "{}", String::from_utf8_lossy(&kr.stderr));
    assert!(stdout(&kr).starts_with("R,K,method,grid_n,seed"));
}
