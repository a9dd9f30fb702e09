//! Robustness-guided fuzzing of swarm missions.
//!
//! Four schemes share one attacker state machine and differ only in how each
//! test case `<P_t, P_a>` is chosen:
//!
//! * `Sa`: key node of the drones reachable within one horizon, best launch
//!   point inside that reach, attacker flies between test cases;
//! * `Ma`: global key node and launch point, attacker teleports;
//! * `Random`: uniformly random target and launch point;
//! * `TargetOnly`: the initial key node is attacked for the whole run.

mod policy;
mod select;
mod spawn;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Vector;
use crate::influence::KatzError;
use crate::scenario::Scenario;
use crate::sim::{run_mission, AgentId, FailureKind, Outcome, SimError, Trace};

pub use policy::FuzzPolicy;
pub use select::{
    argmin, best_test_case, geometry_for, init_test_case, key_node, lookahead_score, ma_next_testcase,
    pilot, place_attacker, random_spawn_for, random_target, random_test_case, reachable_members,
    sa_next_testcase, FuzzContext, PilotGoal,
};
pub use spawn::{spawn_candidates, spawn_point_is_valid, SpawnGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Sa,
    Ma,
    Random,
    TargetOnly,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Sa, Scheme::Ma, Scheme::Random, Scheme::TargetOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Sa => "sa",
            Scheme::Ma => "ma",
            Scheme::Random => "random",
            Scheme::TargetOnly => "target-only",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scheme {s:?} (expected sa, ma, random or target-only)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    /// Step at which the test case was created.
    pub step: u64,
    pub target_id: AgentId,
    pub p_t: Vector,
    pub p_a: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzParams {
    pub lookahead: usize,
    pub settle_steps: u64,
    pub attacker_speed: f64,
    /// Distance the attacker covers in one lookahead horizon.
    pub reach_radius: f64,
    pub d_influence: f64,
    pub alpha_factor: f64,
    pub launch_step: u64,
    pub max_epoch_steps: u64,
    pub budget_epochs: Option<u64>,
    pub spawn_r: Option<f64>,
    pub outer_factor: f64,
    pub sectors: usize,
}

impl FuzzParams {
    pub fn from_scenario(s: &Scenario) -> Self {
        let speed = s.attacker_speed();
        Self {
            lookahead: s.fuzz.lookahead_steps,
            settle_steps: s.fuzz.settle_steps,
            attacker_speed: speed,
            reach_radius: speed * s.fuzz.lookahead_steps as f64 * s.mission.dt_s,
            d_influence: s.d_influence(),
            alpha_factor: s.fuzz.alpha_factor,
            launch_step: s.fuzz.launch_step,
            max_epoch_steps: s.max_epoch_steps(),
            budget_epochs: s.fuzz.budget_epochs,
            spawn_r: s.spawn.r_m,
            outer_factor: s.spawn.outer_factor,
            sectors: s.spawn.sectors,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FuzzError {
    #[error("no valid spawn point around drone {target_id}")]
    NoValidSpawn { target_id: AgentId },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Katz(#[from] KatzError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzOutcome {
    SuccessfulAttack,
    SwarmSecure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzResult {
    pub scenario: String,
    pub scheme: Scheme,
    pub seed: u64,
    pub outcome: FuzzOutcome,
    pub failure: Option<FailureKind>,
    /// Present exactly when the attack succeeded.
    pub steps_to_failure: Option<u64>,
    /// Length of the execution in steps.
    pub steps: u64,
    pub test_cases: Vec<TestCase>,
    pub invalid_count: u64,
}

/// Runs one fuzzing execution and keeps its trace. `budget` overrides the
/// scenario's epoch budget when given.
pub fn run_fuzzing(
    scenario: &Scenario,
    scheme: Scheme,
    budget: Option<u64>,
    seed: u64,
) -> Result<(FuzzResult, Trace), FuzzError> {
    let mut params = FuzzParams::from_scenario(scenario);
    if budget.is_some() {
        params.budget_epochs = budget;
    }
    let controller = scenario.build_controller();
    let mut policy = FuzzPolicy::new(scheme, params, scenario.parked_attacker(), seed);
    let trace = run_mission(scenario, &controller, &mut policy, seed)?;
    let (outcome, failure, steps_to_failure) = match trace.outcome {
        Outcome::Failure(k) => (FuzzOutcome::SuccessfulAttack, Some(k), Some(trace.steps())),
        Outcome::Success | Outcome::SwarmSecure => (FuzzOutcome::SwarmSecure, None, None),
    };
    let result = FuzzResult {
        scenario: scenario.name.clone(),
        scheme,
        seed,
        outcome,
        failure,
        steps_to_failure,
        steps: trace.steps(),
        test_cases: policy.test_cases,
        invalid_count: policy.invalid_count,
    };
    Ok((result, trace))
}

pub fn run_sa_fuzzing(scenario: &Scenario, budget: Option<u64>, seed: u64) -> Result<FuzzResult, FuzzError> {
    run_fuzzing(scenario, Scheme::Sa, budget, seed).map(|r| r.0)
}

pub fn run_ma_fuzzing(scenario: &Scenario, budget: Option<u64>, seed: u64) -> Result<FuzzResult, FuzzError> {
    run_fuzzing(scenario, Scheme::Ma, budget, seed).map(|r| r.0)
}

pub fn run_random_fuzzing(
    scenario: &Scenario,
    budget: Option<u64>,
    seed: u64,
) -> Result<FuzzResult, FuzzError> {
    run_fuzzing(scenario, Scheme::Random, budget, seed).map(|r| r.0)
}

pub fn run_target_only_fuzzing(
    scenario: &Scenario,
    budget: Option<u64>,
    seed: u64,
) -> Result<FuzzResult, FuzzError> {
    run_fuzzing(scenario, Scheme::TargetOnly, budget, seed).map(|r| r.0)
}
