use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use litelfuzz_core::fuzz::{run_fuzzing, FuzzError, Scheme};
use litelfuzz_core::scenario::{Scenario, ScenarioError};
use litelfuzz_core::sim::{FailureKind, Outcome, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub scenario: PathBuf,
    pub scheme: Scheme,
    pub executions: u64,
    pub base_seed: u64,
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("invalid campaign: {0}")]
    Config(String),
    #[error("execution with seed {seed} aborted: {source}")]
    Execution {
        seed: u64,
        #[source]
        source: FuzzError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionStatus {
    Failure,
    /// The swarm completed its mission.
    Success,
    /// The attacker ran out of test cases before the mission ended.
    SecureAtBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub seed: u64,
    pub status: ExecutionStatus,
    pub failure: Option<FailureKind>,
    pub steps_to_failure: Option<u64>,
    pub steps: u64,
    pub test_cases: u64,
    pub invalid_count: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub drones_collide: u64,
    pub obstacle_crash: u64,
    pub timeout: u64,
}

impl FailureCounts {
    pub fn get(&self, kind: FailureKind) -> u64 {
        match kind {
            FailureKind::DronesCollide => self.drones_collide,
            FailureKind::ObstacleCrash => self.obstacle_crash,
            FailureKind::Timeout => self.timeout,
        }
    }

    pub fn add(&mut self, kind: FailureKind) {
        match kind {
            FailureKind::DronesCollide => self.drones_collide += 1,
            FailureKind::ObstacleCrash => self.obstacle_crash += 1,
            FailureKind::Timeout => self.timeout += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.drones_collide + self.obstacle_crash + self.timeout
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub scenario: String,
    pub scheme: Scheme,
    pub base_seed: u64,
    pub executions: u64,
    pub failures: u64,
    pub successes: u64,
    pub secure_at_budget: u64,
    pub counts: FailureCounts,
    pub failure_rate: f64,
    pub mean_steps_to_failure: Option<f64>,
    pub median_steps_to_failure: Option<f64>,
    pub invalid_total: u64,
    pub test_cases_total: u64,
    pub records: Vec<ExecutionRecord>,
}

impl CampaignReport {
    /// Aggregates records given in seed order.
    pub fn from_records(
        scenario: &str,
        scheme: Scheme,
        base_seed: u64,
        records: Vec<ExecutionRecord>,
    ) -> Self {
        let mut counts = FailureCounts::default();
        let (mut successes, mut secure) = (0, 0);
        let mut steps = Vec::new();
        for r in &records {
            match r.status {
                ExecutionStatus::Failure => {
                    if let Some(k) = r.failure {
                        counts.add(k);
                    }
                    steps.extend(r.steps_to_failure);
                }
                ExecutionStatus::Success => successes += 1,
                ExecutionStatus::SecureAtBudget => secure += 1,
            }
        }
        let executions = records.len() as u64;
        let failures = counts.total();
        Self {
            scenario: scenario.to_string(),
            scheme,
            base_seed,
            executions,
            failures,
            successes,
            secure_at_budget: secure,
            counts,
            failure_rate: ratio(failures, executions),
            mean_steps_to_failure: mean(&steps),
            median_steps_to_failure: median(&mut steps),
            invalid_total: records.iter().map(|r| r.invalid_count).sum(),
            test_cases_total: records.iter().map(|r| r.test_cases).sum(),
            records,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn mean(xs: &[u64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().sum::<u64>() as f64 / xs.len() as f64)
}

fn median(xs: &mut [u64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_unstable();
    let m = xs.len() / 2;
    Some(if xs.len() % 2 == 1 {
        xs[m] as f64
    } else {
        (xs[m - 1] + xs[m]) as f64 / 2.0
    })
}

fn record_of(seed: u64, result: &litelfuzz_core::fuzz::FuzzResult, trace: &Trace) -> ExecutionRecord {
    let status = match trace.outcome {
        Outcome::Failure(_) => ExecutionStatus::Failure,
        Outcome::Success => ExecutionStatus::Success,
        Outcome::SwarmSecure => ExecutionStatus::SecureAtBudget,
    };
    ExecutionRecord {
        seed,
        status,
        failure: result.failure,
        steps_to_failure: result.steps_to_failure,
        steps: result.steps,
        test_cases: result.test_cases.len() as u64,
        invalid_count: result.invalid_count,
    }
}

/// Runs seeds `base_seed..base_seed + executions` on a pool of `workers`
/// threads. Results come back in seed order, so the worker count never
/// changes them. Traces are kept only when asked for.
pub fn run_executions(
    scenario: &Scenario,
    scheme: Scheme,
    executions: u64,
    base_seed: u64,
    workers: usize,
    keep_traces: bool,
) -> Result<Vec<(ExecutionRecord, Option<Trace>)>, CampaignError> {
    if workers == 0 {
        return Err(CampaignError::Config("workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CampaignError::Config(e.to_string()))?;
    pool.install(|| {
        (0..executions)
            .into_par_iter()
            .map(|k| {
                let seed = base_seed.wrapping_add(k);
                let (result, trace) = run_fuzzing(scenario, scheme, None, seed)
                    .map_err(|source| CampaignError::Execution { seed, source })?;
                tracing::debug!(seed, outcome = ?trace.outcome, steps = result.steps, "execution finished");
                let record = record_of(seed, &result, &trace);
                Ok((record, keep_traces.then_some(trace)))
            })
            .collect()
    })
}

/// Loads the scenario and runs the whole campaign. Scenario errors abort
/// before any execution starts.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    if config.executions == 0 {
        return Err(CampaignError::Config("executions must be at least 1".into()));
    }
    let scenario = Scenario::load(&config.scenario)?;
    let runs = run_executions(
        &scenario,
        config.scheme,
        config.executions,
        config.base_seed,
        config.workers,
        false,
    )?;
    let records = runs.into_iter().map(|(r, _)| r).collect();
    Ok(CampaignReport::from_records(
        &scenario.name,
        config.scheme,
        config.base_seed,
        records,
    ))
}

/// Per-kind shares of the failures and the failure rate over all
/// executions. Shares are zero when nothing failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureSummary {
    pub executions: u64,
    pub failures: u64,
    pub counts: FailureCounts,
    pub shares: Vec<(FailureKind, f64)>,
    pub failure_rate: f64,
}

impl FailureSummary {
    pub fn new(executions: u64, counts: FailureCounts) -> Self {
        let failures = counts.total();
        Self {
            executions,
            failures,
            counts,
            shares: FailureKind::ALL
                .iter()
                .map(|&k| (k, ratio(counts.get(k), failures)))
                .collect(),
            failure_rate: ratio(failures, executions),
        }
    }

    pub fn share(&self, kind: FailureKind) -> f64 {
        self.shares
            .iter()
            .find(|(k, _)| *k == kind)
            .map_or(0.0, |(_, s)| *s)
    }
}

/// Failure-taxonomy table for a report.
pub fn summarize(report: &CampaignReport) -> String {
    let s = FailureSummary::new(report.executions, report.counts);
    let mut out = String::new();
    let _ = writeln!(out, "scenario {} / scheme {}", report.scenario, report.scheme);
    let _ = writeln!(out, "{:<52} {:>11} {:>10}", "Reason for mission failure", "Occurrences", "Percentage");
    for &(kind, share) in &s.shares {
        let _ = writeln!(
            out,
            "{:<52} {:>11} {:>9.2}%",
            kind.description(),
            format!("{}/{}", s.counts.get(kind), s.failures),
            share * 100.0
        );
    }
    let _ = writeln!(
        out,
        "failures {}/{} executions, rate {:.4}",
        s.failures, s.executions, s.failure_rate
    );
    if let Some(m) = report.mean_steps_to_failure {
        let _ = writeln!(
            out,
            "steps to failure: mean {:.1}, median {:.1}",
            m,
            report.median_steps_to_failure.unwrap_or(m)
        );
    }
    let _ = writeln!(
        out,
        "test cases {}, invalid {}",
        report.test_cases_total, report.invalid_total
    );
    out
}
