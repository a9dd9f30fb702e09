use std::path::{Path, PathBuf};

use litelfuzz::{
    emit_report_plot_data, emit_trace_plot_data, export_trace, read_trace, run_campaign,
    run_executions, summarize, trace_lines, CampaignConfig, CampaignError, CampaignReport,
    ExecutionStatus, FailureCounts, FailureSummary,
};
use litelfuzz_core::fuzz::{run_fuzzing, Scheme};
use litelfuzz_core::scenario::presets;
use litelfuzz_core::sim::{FailureKind, Outcome, Trace};

fn write_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("a1.json");
    std::fs::write(&path, presets::a1_navigate(0.15).to_json()).unwrap();
    path
}

fn config(scenario: PathBuf, scheme: Scheme, workers: usize) -> CampaignConfig {
    CampaignConfig {
        scenario,
        scheme,
        executions: 6,
        base_seed: 40,
        workers,
        out_dir: None,
    }
}

#[test]
fn worker_count_does_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path());
    for scheme in Scheme::ALL {
        let one = run_campaign(&config(path.clone(), scheme, 1)).unwrap().to_json();
        let three = run_campaign(&config(path.clone(), scheme, 3)).unwrap().to_json();
        assert_eq!(one, three);
        let again = run_campaign(&config(path.clone(), scheme, 1)).unwrap().to_json();
        assert_eq!(one, again);
    }
}

#[test]
fn traces_are_identical_across_worker_counts() {
    let s = presets::a1_navigate(0.15);
    let dir = tempfile::tempdir().unwrap();
    let a = run_executions(&s, Scheme::Sa, 4, 7, 1, true).unwrap();
    let b = run_executions(&s, Scheme::Sa, 4, 7, 4, true).unwrap();
    for ((ra, ta), (rb, tb)) in a.iter().zip(&b) {
        assert_eq!(ra, rb);
        let pa = dir.path().join(format!("a-{}.jsonl", ra.seed));
        let pb = dir.path().join(format!("b-{}.jsonl", rb.seed));
        export_trace(ta.as_ref().unwrap(), &pa).unwrap();
        export_trace(tb.as_ref().unwrap(), &pb).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }
}

#[test]
fn executions_use_consecutive_seeds() {
    let s = presets::a1_navigate(0.15);
    let runs = run_executions(&s, Scheme::Random, 3, 100, 2, false).unwrap();
    let seeds: Vec<u64> = runs.iter().map(|(r, _)| r.seed).collect();
    assert_eq!(seeds, vec![100, 101, 102]);
    for (r, _) in &runs {
        let (direct, _) = run_fuzzing(&s, Scheme::Random, None, r.seed).unwrap();
        assert_eq!(r.steps, direct.steps);
        assert_eq!(r.failure, direct.failure);
    }
}

#[test]
fn report_accounting_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path());
    for scheme in Scheme::ALL {
        let r = run_campaign(&config(path.clone(), scheme, 2)).unwrap();
        assert_eq!(r.failures + r.successes + r.secure_at_budget, r.executions);
        assert_eq!(r.counts.total(), r.failures);
        assert!(r.failures <= r.executions);
        assert_eq!(r.failure_rate, r.failures as f64 / r.executions as f64);
        let failed: Vec<u64> = r
            .records
            .iter()
            .filter(|x| x.status == ExecutionStatus::Failure)
            .map(|x| x.steps_to_failure.unwrap())
            .collect();
        assert_eq!(failed.len() as u64, r.failures);
        if !failed.is_empty() {
            let mean = failed.iter().sum::<u64>() as f64 / failed.len() as f64;
            assert!((r.mean_steps_to_failure.unwrap() - mean).abs() < 1e-12);
        }
        let back: CampaignReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}

#[test]
fn scenario_errors_abort_the_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert!(matches!(
        run_campaign(&config(missing, Scheme::Sa, 1)),
        Err(CampaignError::Scenario(_))
    ));
    let mut zero = config(write_scenario(dir.path()), Scheme::Sa, 1);
    zero.executions = 0;
    assert!(matches!(run_campaign(&zero), Err(CampaignError::Config(_))));
}

#[test]
fn failure_table_arithmetic() {
    let counts = FailureCounts {
        drones_collide: 181,
        obstacle_crash: 1622,
        timeout: 0,
    };
    let s = FailureSummary::new(2000, counts);
    assert_eq!(s.failures, 1803);
    assert_eq!(s.share(FailureKind::DronesCollide), 181.0 / 1803.0);
    assert_eq!(s.share(FailureKind::ObstacleCrash), 1622.0 / 1803.0);
    assert_eq!(s.failure_rate, 0.9015);
    assert_eq!(format!("{:.2}", s.share(FailureKind::DronesCollide) * 100.0), "10.04");
    assert_eq!(format!("{:.2}", s.share(FailureKind::ObstacleCrash) * 100.0), "89.96");

    let none = FailureSummary::new(10, FailureCounts::default());
    assert!(none.shares.iter().all(|&(_, v)| v == 0.0));
    assert_eq!(none.failure_rate, 0.0);
}

#[test]
fn summary_prints_counts_and_percentages() {
    let mut r = CampaignReport::from_records("a1-navigate", Scheme::Sa, 0, vec![]);
    r.executions = 2000;
    r.counts = FailureCounts {
        drones_collide: 181,
        obstacle_crash: 1622,
        timeout: 0,
    };
    r.failures = 1803;
    let text = summarize(&r);
    assert!(text.contains("181/1803"), "{text}");
    assert!(text.contains("10.04%"), "{text}");
    assert!(text.contains("1622/1803"), "{text}");
    assert!(text.contains("89.96%"), "{text}");
    assert!(text.contains("0/1803"), "{text}");
    assert!(text.contains("rate 0.9015"), "{text}");
}

fn sample_trace() -> Trace {
    run_fuzzing(&presets::a1_navigate(0.15), Scheme::Sa, None, 2).unwrap().1
}

#[test]
fn exported_trace_round_trips() {
    let trace = sample_trace();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    export_trace(&trace, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count() as u64, trace.steps());
    let lines = read_trace(&path).unwrap();
    assert_eq!(lines, trace_lines(&trace));
    for (line, rec) in lines.iter().zip(&trace.robustness) {
        assert_eq!(line.rob.swarm, rec.swarm);
    }
    let events: usize = lines.iter().map(|l| l.events.len()).sum();
    assert_eq!(events, trace.events.len());
}

#[test]
fn empty_trace_gives_empty_file() {
    let mut trace = sample_trace();
    trace.snapshots.truncate(1);
    trace.robustness.clear();
    trace.events.clear();
    trace.outcome = Outcome::SwarmSecure;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    export_trace(&trace, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap().len(), 0);
    assert!(read_trace(&path).unwrap().is_empty());
}

#[test]
fn plot_data_has_headers_and_one_row_per_item() {
    let trace = sample_trace();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rob.csv");
    emit_trace_plot_data(&trace_lines(&trace), &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "iteration,swarm_robustness,min_margin");
    assert_eq!(rows.len() as u64, trace.steps() + 1);
    for (row, rec) in rows[1..].iter().zip(&trace.robustness) {
        let col: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(col, rec.swarm);
    }

    let s = presets::a1_navigate(0.15);
    let reports: Vec<CampaignReport> = [Scheme::Sa, Scheme::Random]
        .into_iter()
        .map(|scheme| {
            let runs = run_executions(&s, scheme, 2, 0, 1, false).unwrap();
            CampaignReport::from_records(&s.name, scheme, 0, runs.into_iter().map(|(r, _)| r).collect())
        })
        .collect();
    let csv = dir.path().join("reports.csv");
    emit_report_plot_data(&reports, &csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "scheme,executions,failures,rate");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("sa,2,"));
    assert!(rows[2].starts_with("random,2,"));
}
