use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_softcache"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn solve(config: &str) -> (Output, tempfile::TempDir) {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin()
        .args(["solve", "--config"])
        .arg(fixture("tiny").join(config))
        .arg("--out")
        .arg(out.path()));
    (o, out)
}

fn objective(o: &Output) -> f64 {
    let text = stdout(o);
    let line = text.lines().find(|l| l.starts_with("objective")).expect("objective line");
    line.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn solve_with_soft_hits() {
    let (o, dir) = solve("solve_sch.json");
    assert!(o.status.success(), "{o:?}");
    assert!((objective(&o) - 0.9).abs() < 1e-12);
    assert!(stdout(&o).contains("objective  0.9\n"));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("placement.csv")).unwrap(),
        "content,cell\n0,0\n"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scheme"], "SingleSCH");
    assert_eq!(summary["items"], 1);
}

#[test]
fn solve_popularity_baseline() {
    let (o, dir) = solve("solve_single.json");
    assert!(o.status.success(), "{o:?}");
    assert!((objective(&o) - 0.4).abs() < 1e-12);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("placement.csv")).unwrap(),
        "content,cell\n0,0\n"
    );
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .args(["solve", "--config", "/no/such/config.json", "--out"])
        .arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));

    let text = std::fs::read_to_string(fixture("tiny").join("solve_sch.json")).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text.replace("\"cache_size\"", "\"cache_sise\"")).unwrap();
    let o = run(bin().args(["solve", "--config"]).arg(&bad).arg("--out").arg(dir.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cache_sise"));

    let o = run(bin().args(["verify", "--scale", "huge"]));
    assert_eq!(o.status.code(), Some(2));
    let o = run(bin().arg("frobnicate"));
    assert_eq!(o.status.code(), Some(2));
    let o = run(bin()
        .args(["verify", "--suite", "submodularity"])
        .env("SOFTCACHE_THREADS", "many"));
    assert_eq!(o.status.code(), Some(2));
}

fn small_sweep(dir: &Path) -> PathBuf {
    let path = dir.join("sweep.json");
    std::fs::write(
        &path,
        r#"{
            "scenario": {
                "catalog": {"synthetic": {"num_contents": 300}},
                "utility": {"sch1": {"mean_degree": 4}},
                "network": {"geometric": {"num_cells": 8, "num_users": 20}},
                "requests": 3000
            },
            "sweep": {"axis": "cache_size", "values": [1, 2, 3, 4]},
            "seeds": [1, 2]
        }"#,
    )
    .unwrap();
    path
}

fn sweep(config: &Path, out: &Path, threads: &str) -> Output {
    run(bin()
        .args(["sweep", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--threads", threads]))
}

#[test]
fn sweep_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_sweep(dir.path());
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    assert!(sweep(&config, &a, "4").status.success());
    assert!(sweep(&config, &b, "4").status.success());
    assert!(sweep(&config, &c, "1").status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text, std::fs::read_to_string(&c).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "axis,value,scheme,seed,objective,sim_hit_ratio,sim_stderr,solve_ms");
    assert_eq!(lines.len(), 1 + 4 * 4 * 2);
    assert!(lines[1].starts_with("cache_size,1.0,Single,1,"));
    assert!(lines[2].starts_with("cache_size,1.0,Single,2,"));
    assert!(lines[3].starts_with("cache_size,1.0,SingleSCH,1,"));
}

#[test]
fn seed_override_changes_the_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_sweep(dir.path());
    let out = dir.path().join("s.csv");
    let o = run(bin()
        .args(["sweep", "--seeds", "7"])
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out));
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 4);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("7")));
}

#[test]
fn interrupted_sweep_keeps_complete_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_sweep(dir.path());
    let out = dir.path().join("partial.csv");
    let o = run(bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .env("SOFTCACHE_FAIL_AFTER_ROWS", "5"));
    assert!(!o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.ends_with('\n'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    for l in &lines[1..] {
        let fields: Vec<&str> = l.split(',').collect();
        assert_eq!(fields.len(), 8, "{l}");
        assert!(fields[4].parse::<f64>().is_ok());
    }
}

#[test]
fn default_cache_size_sweep_has_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/cache_size.json");
    let out = dir.path().join("grid.csv");
    let o = run(bin().arg("sweep").arg("--config").arg(&config).arg("--out").arg(&out));
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 14 * 4);
}

#[test]
fn ingest_writes_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle");
    let tiny = fixture("tiny");
    let o = run(bin()
        .args(["ingest", "--contents"])
        .arg(tiny.join("contents.csv"))
        .arg("--relations")
        .arg(tiny.join("relations.csv"))
        .arg("--out")
        .arg(&bundle));
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("contents         4"));
    assert!(stdout(&o).contains("relations        2"));
    assert_eq!(
        std::fs::read_to_string(bundle.join("relations.csv")).unwrap(),
        "src,dst,utility\n1,0,1\n2,0,1\n"
    );

    std::fs::write(dir.path().join("broken.csv"), "src,dst,utility\n1,9,1\n").unwrap();
    let o = run(bin()
        .args(["ingest", "--contents"])
        .arg(tiny.join("contents.csv"))
        .arg("--relations")
        .arg(dir.path().join("broken.csv"))
        .arg("--out")
        .arg(dir.path().join("nope")));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_small_passes() {
    let o = run(bin().args(["verify", "--scale", "small"]));
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("pass knapsack_bounds"));
    assert!(text.contains("pass tie_break"));
    assert!(!text.contains("FAIL"));
    let o = run(bin().args(["verify", "--suite", "nope"]));
    assert_eq!(o.status.code(), Some(2));
}
