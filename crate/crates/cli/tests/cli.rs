use std::path::Path;
use std::process::Command;

use litelfuzz_core::scenario::presets;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_litelfuzz"))
}

fn scenario_file(dir: &Path) -> String {
    let path = dir.join("a1.json");
    std::fs::write(&path, presets::a1_navigate(0.15).to_json()).unwrap();
    path.display().to_string()
}

#[test]
fn run_summarize_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_file(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--scenario", &scenario, "--scheme", "sa,random"])
        .args(["--executions", "3", "--seed", "9", "--workers", "2", "--traces"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("Reason for mission failure"));
    for scheme in ["sa", "random"] {
        assert!(out.join(format!("report-{scheme}.json")).exists());
        for seed in 9..12 {
            assert!(out.join("traces").join(format!("{scheme}-{seed}.jsonl")).exists());
        }
    }

    let summary = bin().arg("summarize").arg(out.join("report-sa.json")).output().unwrap();
    assert!(summary.status.success());
    assert!(String::from_utf8_lossy(&summary.stdout).contains("Drones collide with each other"));

    let csv = dir.path().join("trace.csv");
    let plot = bin()
        .arg("plot")
        .arg(out.join("traces").join("sa-9.jsonl"))
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(plot.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("iteration,swarm_robustness,min_margin\n"));

    let csv = dir.path().join("reports.csv");
    let plot = bin()
        .arg("plot")
        .arg(out.join("report-sa.json"))
        .arg(out.join("report-random.json"))
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(plot.status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);
}

#[test]
fn worker_count_gives_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenario_file(dir.path());
    let mut outs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let st = bin()
            .args(["run", "--scenario", &scenario, "--scheme", "ma"])
            .args(["--executions", "4", "--seed", "3", "--workers", workers, "--traces"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(st.status.success());
        outs.push(out);
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&outs[0].join("report-ma.json")), read(&outs[1].join("report-ma.json")));
    for seed in 3..7 {
        let name = format!("ma-{seed}.jsonl");
        assert_eq!(read(&outs[0].join("traces").join(&name)), read(&outs[1].join("traces").join(&name)));
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": \"x\"}").unwrap();
    let out = dir.path().join("out");
    let st = bin()
        .arg("run")
        .arg("--scenario")
        .arg(&bad)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("error"));

    let missing = bin().arg("summarize").arg(dir.path().join("none.json")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let scenario = scenario_file(dir.path());
    let zero = bin()
        .args(["run", "--scenario", &scenario, "--executions", "0"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(zero.status.code(), Some(2));
}
