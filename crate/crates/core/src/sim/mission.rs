use serde::{Deserialize, Serialize};

use crate::geometry::Vector;
use crate::robustness::{constraint_violations, Constraint, RobustnessMonitor, RobustnessRecord};
use crate::scenario::Scenario;
use crate::sim::agent::{integrate_step, AgentId, AgentState, Role};
use crate::sim::controller::Controller;
use crate::sim::failure::{detect_failure, FailureKind};
use crate::sim::world::{MissionSpec, WorldState};
use crate::sim::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "failure", rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure(FailureKind),
    SwarmSecure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Violation {
        agent: AgentId,
        constraint: Constraint,
    },
    TestCase {
        target_id: AgentId,
        p_t: Vector,
        p_a: Vector,
    },
    InvalidTestCase {
        target_id: AgentId,
    },
    NoValidSpawn {
        target_id: AgentId,
    },
    Teleport {
        to: Vector,
    },
    Failure {
        failure: FailureKind,
    },
    Success,
    BudgetExhausted,
}

/// What the attacker does during the next step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackerAction {
    /// Stay in place.
    Hold,
    /// Fly with this velocity (clamped to the attacker's speed limit).
    Move(Vector),
    /// Relocate instantly and come to rest.
    Teleport(Vector),
    /// Stop the execution: the attack budget is spent.
    Halt,
}

/// Read-only view handed to attacker policies each step.
pub struct StepContext<'a> {
    pub spec: &'a MissionSpec,
    pub controller: &'a dyn Controller,
    pub monitor: &'a RobustnessMonitor,
    pub attacker_speed: f64,
}

pub trait AttackerPolicy {
    /// Attacker agent to insert into the initial world, if any.
    fn spawn(&mut self, world: &WorldState) -> Option<AgentState>;

    fn act(
        &mut self,
        world: &WorldState,
        ctx: &StepContext<'_>,
        events: &mut Vec<EventKind>,
    ) -> Result<AttackerAction, SimError>;
}

/// Executions without any attacker.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAttacker;

impl AttackerPolicy for NoAttacker {
    fn spawn(&mut self, _world: &WorldState) -> Option<AgentState> {
        None
    }

    fn act(
        &mut self,
        _world: &WorldState,
        _ctx: &StepContext<'_>,
        _events: &mut Vec<EventKind>,
    ) -> Result<AttackerAction, SimError> {
        Ok(AttackerAction::Hold)
    }
}

/// An attacker that sits at a fixed position for the whole execution.
#[derive(Debug, Clone)]
pub struct StaticAttacker {
    pub agent: AgentState,
}

impl AttackerPolicy for StaticAttacker {
    fn spawn(&mut self, _world: &WorldState) -> Option<AgentState> {
        Some(self.agent.clone())
    }

    fn act(
        &mut self,
        _world: &WorldState,
        _ctx: &StepContext<'_>,
        _events: &mut Vec<EventKind>,
    ) -> Result<AttackerAction, SimError> {
        Ok(AttackerAction::Hold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub snapshots: Vec<WorldState>,
    /// `robustness[k]` belongs to `snapshots[k + 1]`.
    pub robustness: Vec<RobustnessRecord>,
    pub events: Vec<(u64, EventKind)>,
    pub outcome: Outcome,
}

impl Trace {
    pub fn steps(&self) -> u64 {
        self.snapshots.last().map(|w| w.t).unwrap_or(0)
    }

    pub fn events_at(&self, t: u64) -> impl Iterator<Item = &EventKind> {
        self.events
            .iter()
            .filter(move |(s, _)| *s == t)
            .map(|(_, e)| e)
    }
}

/// Moves the world forward by one step.
///
/// Swarm commands are computed on the pre-step snapshot, so every agent
/// reacts to the same state. The attacker has direct velocity control,
/// bounded only by `attacker_speed`.
pub fn advance(
    world: &mut WorldState,
    spec: &MissionSpec,
    controller: &dyn Controller,
    action: AttackerAction,
    attacker_speed: f64,
) -> Result<(), SimError> {
    let commands = controller.commands(world, spec);
    for agent in world.agents.iter_mut() {
        if agent.role == Role::Attacker {
            let old = agent.velocity;
            let zero = Vector::zeros(agent.position.dim());
            match action {
                AttackerAction::Move(v) => {
                    if !v.is_finite() {
                        return Err(SimError::InvalidState("non-finite attacker command".into()));
                    }
                    let v = v.clamp_norm(attacker_speed);
                    agent.position = agent.position + v * spec.dt;
                    agent.velocity = v;
                }
                AttackerAction::Teleport(p) => {
                    agent.position = p;
                    agent.velocity = zero;
                }
                AttackerAction::Hold | AttackerAction::Halt => agent.velocity = zero,
            }
            agent.acceleration = (agent.velocity - old) * (1.0 / spec.dt);
            continue;
        }
        let cmd = commands
            .get(&agent.id)
            .copied()
            .unwrap_or_else(|| Vector::zeros(agent.position.dim()));
        *agent = integrate_step(agent, cmd, spec)?;
    }
    world.t += 1;
    controller.after_step(world, spec);
    Ok(())
}

/// Runs one execution until success, a physical failure, or the attacker
/// policy halts.
pub fn run_mission(
    scenario: &Scenario,
    controller: &dyn Controller,
    policy: &mut dyn AttackerPolicy,
    seed: u64,
) -> Result<Trace, SimError> {
    let spec = scenario.mission_spec();
    let mut world = scenario.initial_world(seed);
    if let Some(attacker) = policy.spawn(&world) {
        world.agents.push(attacker);
    }
    let mut monitor = RobustnessMonitor::new(&spec, scenario.fuzz.progress_window_steps);
    monitor.observe(&world);
    let attacker_speed = scenario.attacker_speed();

    let mut trace = Trace {
        snapshots: vec![world.clone()],
        robustness: Vec::new(),
        events: Vec::new(),
        outcome: Outcome::SwarmSecure,
    };
    let mut pending = Vec::new();
    loop {
        let ctx = StepContext {
            spec: &spec,
            controller,
            monitor: &monitor,
            attacker_speed,
        };
        let action = policy.act(&world, &ctx, &mut pending)?;
        let t_now = world.t;
        trace.events.extend(pending.drain(..).map(|e| (t_now, e)));
        if action == AttackerAction::Halt {
            trace.events.push((world.t, EventKind::BudgetExhausted));
            trace.outcome = Outcome::SwarmSecure;
            break;
        }
        advance(&mut world, &spec, controller, action, attacker_speed)?;
        monitor.observe(&world);
        let record = monitor.record(&world);
        for (agent, constraint) in constraint_violations(&record) {
            trace
                .events
                .push((world.t, EventKind::Violation { agent, constraint }));
        }
        trace.robustness.push(record);
        trace.snapshots.push(world.clone());

        if let Some(failure) = detect_failure(&world, &spec, spec.nominal_steps) {
            trace.events.push((world.t, EventKind::Failure { failure }));
            trace.outcome = Outcome::Failure(failure);
            break;
        }
        if world.mission_complete(&spec) {
            trace.events.push((world.t, EventKind::Success));
            trace.outcome = Outcome::Success;
            break;
        }
    }
    Ok(trace)
}
