use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use warehouse_layout::layout::validate;
use warehouse_layout::repair::{build_model, export_lp, parse_assignment};
use warehouse_layout::{Layout, Scenario, TileType};

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_whlayout"))
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("WAREHOUSE_SOLVER")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TINY: &str = r#"
scenario = "workstation"
full = [7, 4]
storage = [5, 4]
n_shelves = 4
n_fixed = 2
n_agents = 4
n_evals = 2
horizon = 100
batch_size = 30
eval_budget = 100
seed = 7

[archive]
dims = [6, 8]
component_range = [0.0, 6.0]
task_length_range = [1.0, 9.0]
downsample_dims = [3, 4]
"#;

#[test]
fn human_layout_for_the_largest_setup() {
    let text = ok(&["gen-human-layout", "--setup", "4"]);
    let l = Layout::parse(&text).unwrap();
    assert_eq!((l.width(), l.height()), (36, 33));
    assert_eq!(l.count(TileType::Shelf), 240);
    assert_eq!(l.count(TileType::Workstation), 22);
    assert!(validate(&l, Scenario::Workstation, 200).meets(Scenario::Workstation));
    let json = ok(&["gen-human-layout", "--setup", "1", "--json"]);
    let h = Layout::parse_any(&json).unwrap();
    assert_eq!(h.count(TileType::HomeLocation), 88);
}

#[test]
fn config_errors_exit_with_code_2() {
    let out = run(&["gen-human-layout", "--setup", "nine"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("setup"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "setup = \"desk\"\n[archive]\ndims = [4, 0]\n").unwrap();
    let out = run(&["optimize", "-c", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("archive"));
}

/// Single agent between a workstation and two endpoints, both 5 steps away.
const SINGLE: &str = "type warehouse\nheight 2\nwidth 6\nstorage 0 1 2 5\nw....e\n....e@\n";

#[test]
fn evaluate_single_agent_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("single.txt");
    std::fs::write(&layout, SINGLE).unwrap();
    let out = |name: &str| dir.path().join(name);
    let args = |o: &Path| {
        vec![
            "evaluate".to_string(),
            path(&layout).into(),
            "--setup".into(),
            "desk".into(),
            "--agents".into(),
            "1".into(),
            "--runs".into(),
            "3".into(),
            "--horizon".into(),
            "1000".into(),
            "--sweep".into(),
            "1".into(),
            "-o".into(),
            path(o).into(),
        ]
    };
    let a: Vec<String> = args(&out("a"));
    ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
    let b: Vec<String> = args(&out("b"));
    ok(&b.iter().map(String::as_str).collect::<Vec<_>>());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out("a").join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["success_rate"], 1.0);
    let tp = report["mean_throughput"].as_f64().unwrap();
    assert!((tp - 0.2).abs() <= 0.02, "{tp}");
    let again: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out("b").join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["runs"], again["runs"]);
    let seeds: Vec<u64> = report["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds.len(), 3);
    assert!(seeds[0] != seeds[1] && seeds[1] != seeds[2]);
    let curves = std::fs::read_to_string(out("a").join("finished_per_timestep.csv")).unwrap();
    assert_eq!(curves.lines().next().unwrap(), "timestep,run_0,run_1,run_2");
    assert_eq!(curves.lines().count(), 1001);
    let usage = std::fs::read_to_string(out("a").join("tile_usage.csv")).unwrap();
    assert_eq!(usage.lines().count(), 2);
    assert!(out("a").join("tile_usage.svg").exists());
    let sweep = std::fs::read_to_string(out("a").join("sweep.csv")).unwrap();
    assert!(sweep.lines().nth(1).unwrap().starts_with("1,"));
}

#[test]
fn evaluate_rejects_an_invalid_layout_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("bad.txt");
    // Endpoint with no shelf next to it.
    std::fs::write(
        &layout,
        "type warehouse\nheight 2\nwidth 6\nstorage 0 1 2 5\nw....e\n......\n",
    )
    .unwrap();
    let out = run(&[
        "evaluate",
        path(&layout),
        "--setup",
        "desk",
        "--agents",
        "1",
        "--runs",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("endpoint_without_shelf"));
}

fn archive_csv(dir: &Path) -> String {
    std::fs::read_to_string(dir.join("archive/archive.csv")).unwrap()
}

#[test]
fn optimize_writes_artifacts_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let a = dir.path().join("a");
    ok(&["optimize", "-c", path(&cfg), "-o", path(&a)]);
    let stats = std::fs::read_to_string(a.join("stats.csv")).unwrap();
    // 100 evaluations in batches of 30.
    assert_eq!(stats.lines().count(), 1 + 4);
    assert!(stats.lines().last().unwrap().starts_with("4,100,"));
    for f in [
        "manifest.json",
        "config.toml",
        "checkpoint.json",
        "dataset.jsonl",
        "archive/archive.json",
        "archive/heatmap.svg",
    ] {
        assert!(a.join(f).exists(), "{f}");
    }
    assert_eq!(
        std::fs::read_to_string(a.join("dataset.jsonl"))
            .unwrap()
            .lines()
            .count(),
        100
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["evaluations"], 100);
    assert_eq!(
        manifest["artifacts"]["config.toml"].as_str().unwrap().len(),
        64
    );

    let b = dir.path().join("b");
    ok(&["optimize", "-c", path(&cfg), "-o", path(&b)]);
    assert_eq!(archive_csv(&a), archive_csv(&b));
    let other: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    for f in ["archive/archive.json", "dataset.jsonl", "stats.csv"] {
        assert_eq!(manifest["artifacts"][f], other["artifacts"][f], "{f}");
    }

    let c = dir.path().join("c");
    let first = run(&[
        "optimize",
        "-c",
        path(&cfg),
        "-o",
        path(&c),
        "--stop-after",
        "2",
    ]);
    assert!(first.status.success());
    assert!(!c.join("archive").exists());
    assert_eq!(
        std::fs::read_to_string(c.join("stats.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
    ok(&["optimize", "-c", path(&cfg), "-o", path(&c), "--resume"]);
    assert_eq!(archive_csv(&a), archive_csv(&c));

    let out = run(&[
        "optimize",
        "-c",
        path(&cfg),
        "-o",
        path(&c),
        "--resume",
        "--seed",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let s: serde_json::Value = serde_json::from_str(&ok(&["stats", path(&a)])).unwrap();
    assert_eq!(s["dims"], serde_json::json!([6, 8]));
    assert!(s["qd_score"].as_f64().unwrap() > 0.0);
    let h = dir.path().join("h");
    ok(&[
        "export-heatmap",
        path(&a.join("archive/archive.json")),
        "-o",
        path(&h),
    ]);
    assert_eq!(
        std::fs::read_to_string(h.join("heatmap.csv"))
            .unwrap()
            .lines()
            .count(),
        6
    );
}

#[test]
fn dsage_without_a_reachable_surrogate_still_spends_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    let text = TINY.replace("eval_budget = 100", "eval_budget = 40\nalgorithm = \"dsage\"\nn_rand = 20\nsurrogate = [\"/nonexistent/surrogate\"]");
    std::fs::write(&cfg, text).unwrap();
    let a = dir.path().join("a");
    ok(&["optimize", "-c", path(&cfg), "-o", path(&a)]);
    assert_eq!(
        std::fs::read_to_string(a.join("dataset.jsonl"))
            .unwrap()
            .lines()
            .count(),
        40
    );
}

fn messy() -> &'static str {
    "type warehouse\nheight 4\nwidth 7\nstorage 0 1 4 5\n.@@e@..\nw.e@@.w\n.@...@.\n..e@e..\n"
}

#[test]
fn repair_builtin_and_through_the_adapter_contract() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    std::fs::write(&input, messy()).unwrap();
    let out = dir.path().join("out.txt");
    let report = dir.path().join("outcome.json");
    ok(&[
        "repair",
        path(&input),
        "--scenario",
        "workstation",
        "--shelves",
        "4",
        "-o",
        path(&out),
        "--report",
        path(&report),
    ]);
    let repaired = Layout::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(repaired.count(TileType::Shelf), 4);
    assert!(validate(&repaired, Scenario::Workstation, 0).meets(Scenario::Workstation));
    let outcome: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(outcome["status"], "optimal");

    // The binary's own solve-lp verb serves as an external solver.
    let via = Command::new(bin())
        .args([
            "repair",
            path(&input),
            "--scenario",
            "workstation",
            "--shelves",
            "4",
        ])
        .env("WAREHOUSE_SOLVER", format!("{} solve-lp", path(&bin())))
        .output()
        .unwrap();
    assert!(
        via.status.success(),
        "{}",
        String::from_utf8_lossy(&via.stderr)
    );
    let again = Layout::parse(std::str::from_utf8(&via.stdout).unwrap()).unwrap();
    let original = Layout::parse(messy()).unwrap();
    assert_eq!(again.hamming(&original), repaired.hamming(&original));

    let broken = Command::new(bin())
        .args([
            "repair",
            path(&input),
            "--scenario",
            "workstation",
            "--shelves",
            "4",
        ])
        .env("WAREHOUSE_SOLVER", "/nonexistent/solver")
        .output()
        .unwrap();
    assert_eq!(broken.status.code(), Some(3));
    let infeasible = run(&[
        "repair",
        path(&input),
        "--scenario",
        "workstation",
        "--shelves",
        "19",
    ]);
    assert_eq!(infeasible.status.code(), Some(3));
}

#[test]
fn solve_lp_follows_the_contract() {
    let l = Layout::parse(messy()).unwrap();
    let m = build_model(&l, Scenario::Workstation, 4, 2, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("m.lp");
    std::fs::write(&lp, export_lp(&m.lp)).unwrap();
    let out = run(&["solve-lp", path(&lp), "30"]);
    assert_eq!(out.status.code(), Some(0));
    let pairs = parse_assignment(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let shelves: f64 = pairs
        .iter()
        .filter(|(n, _)| n.starts_with("x_s_"))
        .map(|(_, v)| v)
        .sum();
    assert!((shelves - 4.0).abs() < 1e-6);

    let m = build_model(&l, Scenario::Workstation, 19, 2, 0).unwrap();
    std::fs::write(&lp, export_lp(&m.lp)).unwrap();
    assert_eq!(run(&["solve-lp", path(&lp), "30"]).status.code(), Some(2));
    std::fs::write(&lp, "not an lp file").unwrap();
    assert_eq!(run(&["solve-lp", path(&lp), "30"]).status.code(), Some(5));
}
