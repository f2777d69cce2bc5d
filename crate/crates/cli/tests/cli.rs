use std::path::Path;
use std::process::Command;

fn histories(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_histories")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let shipped = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml")).unwrap();
    let text = shipped
        .replace("games = 10", "games = 2")
        .replace("turns = 120", "turns = 72")
        .replace("seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]", "seeds = [3, 4]");
    let path = dir.join("small.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn scenario_prints_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = histories(&["scenario", "--name", "three-attacker", "--condition", "baseline", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let outcomes: Vec<&str> = text.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(outcomes, ["success", "success", "failure"]);
    assert!(dir.path().join("manifest.csv").exists());
}

#[test]
fn unknown_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        histories(&["scenario", "--name", "nope", "--condition", "histories", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown scenario"));
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = histories(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for cond in ["baseline", "histories"] {
        for g in 0..2 {
            let metrics = std::fs::read_to_string(out.join(format!("metrics_{cond}_{g}.csv"))).unwrap();
            assert_eq!(metrics.lines().next(), Some("turn,cities,gold"));
            assert_eq!(metrics.lines().count(), 1 + 73);
            assert!(out.join(format!("decisions_{cond}_{g}.csv")).exists());
        }
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let s = histories(&["summarize", "--in", out.to_str().unwrap()]);
    assert!(s.status.success());
    assert_eq!(std::fs::read_to_string(out.join("summary.csv")).unwrap(), summary);
    assert_eq!(String::from_utf8(s.stdout).unwrap(), String::from_utf8(o.stdout).unwrap());
}

#[test]
fn condition_filter_and_seed_offset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |offset: &str, name: &str| {
        let out = dir.path().join(name);
        let o = histories(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--condition",
            "histories",
            "--seed-offset",
            offset,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("0", "a");
    let b = run("100", "b");
    assert!(a.join("metrics_histories_0.csv").exists());
    assert!(!a.join("metrics_baseline_0.csv").exists());
    let read = |d: &Path| std::fs::read(d.join("metrics_histories_0.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}
