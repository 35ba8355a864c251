use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name)
}

fn mrws(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrws"))
        .args(args)
        .env_remove("MRWS_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_json(o: &Output) -> serde_json::Value {
    serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).expect("stderr holds one JSON object")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_triangle_graph() {
    let o = mrws(&["check", path_str(&data("triangle_graph.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["nodes"], 3);
    assert!(v["balance"]["max_reversibility_violation"].as_f64().unwrap() <= 1e-14);
    assert!(v["balance"]["max_invariance_violation"].as_f64().unwrap() <= 1e-14);
}

#[test]
fn check_reports_domain() {
    let o = mrws(&["check", path_str(&data("two_node.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["domain"]["boundary"], serde_json::json!([1]));
}

#[test]
fn solve_two_nodes_by_hand() {
    let dir = tempfile::tempdir().unwrap();
    let o = mrws(&["solve", path_str(&data("two_node.json")), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("node,label,value"));
    let values: Vec<f64> = rows.map(|r| r.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 2);
    assert!((values[0] - 1.5).abs() < 1e-12);
    assert!((values[1] - 2.0).abs() < 1e-12);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
}

#[test]
fn counterexample_verifies() {
    let o = mrws(&["counterexample", "--levels", "20", "-p", "3", "--verify"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 20 + 3);
    assert!(text.trim_end().ends_with("PASS"));
}

#[test]
fn evolve_writes_trajectory_and_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let o = mrws(&["evolve", path_str(&data("ring_evolve.json")), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,node,value\n"));
    // 21 times on 5 interior nodes
    assert_eq!(traj.lines().count(), 1 + 21 * 5);
    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert!(ledger.starts_with("t,mass,drift_gap\n"));
    assert_eq!(ledger.lines().count(), 22);
}

#[test]
fn poincare_prints_report() {
    let o = mrws(&["poincare", path_str(&data("kernel_heat.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["exact"], true);
    assert!(v["lambda_best"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_passes_on_examples() {
    for name in ["ring_drov.json", "kernel_heat.json", "star.json"] {
        let o = mrws(&["verify", path_str(&data(name))]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(stdout(&o).lines().all(|l| l.starts_with("PASS")));
    }
}

#[test]
fn outputs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = data("ring_drov.json");
    let oa = mrws(&["--threads", "1", "solve", path_str(&cfg), "--out", path_str(a.path())]);
    let ob = mrws(&["--threads", "4", "solve", path_str(&cfg), "--out", path_str(b.path())]);
    assert_eq!(oa.stdout, ob.stdout);
    for f in ["solution.csv", "report.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
    assert_eq!(mrws(&["verify", path_str(&cfg)]).stdout, mrws(&["verify", path_str(&cfg)]).stdout);
}

fn scenario(dir: &Path, body: &str) -> PathBuf {
    std::fs::copy(data("two_node_graph.json"), dir.join("g.json")).unwrap();
    let path = dir.join("s.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        r#"{"space":"g.json","omega":[0],"ap":{"type":"plaplacian","p":2},"variant":"gl","lamda":1}"#,
    );
    let o = mrws(&["solve", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("lamda"));
}

#[test]
fn missing_files_and_nodes_are_config_errors() {
    let o = mrws(&["check", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["exit_code"], 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), r#"{"space":"g.json","omega":[5]}"#);
    assert_eq!(mrws(&["check", path_str(&cfg)]).status.code(), Some(2));

    let cfg = scenario(
        dir.path(),
        r#"{"space":"g.json","omega":[0],"ap":{"type":"plaplacian","p":2},"variant":"gl","lambda":1,"z":{"constant":1}}"#,
    );
    let o = mrws(&["solve", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(error_json(&o)["message"].as_str().unwrap().contains("flux"));
}

#[test]
fn randomized_modes_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(
        dir.path(),
        r#"{"space":"g.json","omega":[0],"ap":{"type":"plaplacian","p":2},"variant":"gl","lambda":1,"z":{"constant":1},"flux":{"constant":0}}"#,
    );
    assert_eq!(mrws(&["verify", path_str(&cfg)]).status.code(), Some(2));
}

#[test]
fn iteration_cap_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("ring_graph.json"), dir.path().join("ring.json")).unwrap();
    let cfg = dir.path().join("s.json");
    std::fs::write(
        &cfg,
        r#"{"space":"ring.json","omega":[0,1,2,3],"ap":{"type":"plaplacian","p":4},"variant":"gl","lambda":2,
            "z":{"constant":0,"0":3,"2":-2},"flux":{"constant":0.5},"solver":{"max_iter":1}}"#,
    )
    .unwrap();
    let o = mrws(&["solve", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], false);
}

#[test]
fn thread_settings_are_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_mrws"))
        .args(["check", path_str(&data("triangle_graph.json"))])
        .env("MRWS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(mrws(&["--threads", "0", "check", path_str(&data("triangle_graph.json"))]).status.code(), Some(2));
}

#[test]
fn bad_subcommand_exits_two() {
    assert_eq!(mrws(&["frobnicate"]).status.code(), Some(2));
}
