use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fuzz::select::{
    init_test_case, key_node, ma_next_testcase, pilot, random_spawn_for,
    random_test_case, sa_next_testcase, FuzzContext, PilotGoal,
};
use crate::fuzz::{FuzzError, FuzzParams, Scheme, TestCase};
use crate::geometry::Vector;
use crate::sim::{
    AgentId, AgentState, AttackerAction, AttackerPolicy, EventKind, SimError, StepContext,
    WorldState,
};

/// Distance at which a launch point counts as reached.
const ARRIVAL_EPS: f64 = 1e-6;

/// The pursuit ends once the attacker is within this multiple of `d_s` of
/// the target drone.
const CONTACT_FACTOR: f64 = 1.25;

/// Mixed into the seed so the policy's random stream is independent of the
/// start-position jitter.
const POLICY_STREAM: u64 = 0x5eed_a77a_c4e2_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EpochKind {
    Initial,
    Respawn,
    Next,
}

#[derive(Debug, Clone, PartialEq)]
enum Phase {
    Waiting,
    Flying {
        /// Launch point still to be reached before the pursuit starts.
        launch: Option<Vector>,
        target_id: AgentId,
        steps: u64,
    },
    Settling {
        remaining: u64,
    },
    Retry {
        remaining: u64,
        kind: EpochKind,
    },
    Done,
}

/// Attacker state machine shared by all fuzzing schemes.
///
/// Each epoch creates a test case `<P_t, P_a>`, brings the attacker to `P_a`
/// (teleport for MA and for (re)spawns, flight otherwise), lets it pursue the
/// target drone until it is close, then waits `settle_steps` before the next
/// epoch.
pub struct FuzzPolicy {
    scheme: Scheme,
    params: FuzzParams,
    attacker: AgentState,
    rng: ChaCha8Rng,
    phase: Phase,
    fixed_target: Option<AgentId>,
    pub test_cases: Vec<TestCase>,
    pub invalid_count: u64,
}

impl FuzzPolicy {
    pub fn new(scheme: Scheme, params: FuzzParams, attacker: AgentState, seed: u64) -> Self {
        Self {
            scheme,
            params,
            attacker,
            rng: ChaCha8Rng::seed_from_u64(seed ^ POLICY_STREAM),
            phase: Phase::Waiting,
            fixed_target: None,
            test_cases: Vec::new(),
            invalid_count: 0,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn select(
        &mut self,
        kind: EpochKind,
        world: &WorldState,
        fctx: &FuzzContext<'_>,
    ) -> Result<TestCase, FuzzError> {
        let attacker_pos = world.attacker().map(|a| a.position);
        match (self.scheme, kind) {
            (Scheme::Random, _) => random_test_case(world, fctx, &mut self.rng),
            (Scheme::TargetOnly, _) if self.fixed_target.is_some() => {
                let id = self.fixed_target.unwrap_or_default();
                random_spawn_for(world, id, fctx, &mut self.rng)
            }
            (Scheme::TargetOnly, _) => {
                let id = key_node(world, fctx)?;
                self.fixed_target = Some(id);
                random_spawn_for(world, id, fctx, &mut self.rng)
            }
            (_, EpochKind::Initial | EpochKind::Respawn) => init_test_case(world, fctx),
            (Scheme::Ma, EpochKind::Next) => ma_next_testcase(world, fctx),
            (Scheme::Sa, EpochKind::Next) => match attacker_pos {
                Some(p) => sa_next_testcase(world, &p, fctx),
                None => init_test_case(world, fctx),
            },
        }
    }

    fn new_epoch(
        &mut self,
        kind: EpochKind,
        world: &WorldState,
        ctx: &StepContext<'_>,
        events: &mut Vec<EventKind>,
    ) -> Result<AttackerAction, SimError> {
        if let Some(budget) = self.params.budget_epochs {
            if self.test_cases.len() as u64 >= budget {
                self.phase = Phase::Done;
                return Ok(AttackerAction::Halt);
            }
        }
        let params = self.params.clone();
        let fctx = FuzzContext {
            spec: ctx.spec,
            controller: ctx.controller,
            monitor: ctx.monitor,
            params: &params,
        };
        let tc = match self.select(kind, world, &fctx) {
            Ok(tc) => tc,
            Err(FuzzError::NoValidSpawn { target_id }) => {
                events.push(EventKind::NoValidSpawn { target_id });
                self.phase = Phase::Retry {
                    remaining: params.lookahead as u64,
                    kind,
                };
                return Ok(AttackerAction::Hold);
            }
            Err(FuzzError::Sim(e)) => return Err(e),
            Err(e) => return Err(SimError::InvalidState(e.to_string())),
        };
        events.push(EventKind::TestCase {
            target_id: tc.target_id,
            p_t: tc.p_t,
            p_a: tc.p_a,
        });
        self.test_cases.push(tc.clone());
        let teleport = kind != EpochKind::Next || self.scheme == Scheme::Ma;
        if teleport {
            self.phase = Phase::Flying {
                launch: None,
                target_id: tc.target_id,
                steps: 0,
            };
            events.push(EventKind::Teleport { to: tc.p_a });
            Ok(AttackerAction::Teleport(tc.p_a))
        } else {
            self.phase = Phase::Flying {
                launch: Some(tc.p_a),
                target_id: tc.target_id,
                steps: 0,
            };
            Ok(pilot(world, PilotGoal::Point(tc.p_a), ctx.spec, ctx.attacker_speed))
        }
    }

    fn current_target(&self) -> Option<AgentId> {
        self.test_cases.last().map(|tc| tc.target_id)
    }
}

impl AttackerPolicy for FuzzPolicy {
    fn spawn(&mut self, _world: &WorldState) -> Option<AgentState> {
        Some(self.attacker.clone())
    }

    fn act(
        &mut self,
        world: &WorldState,
        ctx: &StepContext<'_>,
        events: &mut Vec<EventKind>,
    ) -> Result<AttackerAction, SimError> {
        if self.phase == Phase::Done {
            return Ok(AttackerAction::Halt);
        }
        let Some(att) = world.attacker() else {
            return Ok(AttackerAction::Hold);
        };
        let att_pos = att.position;
        let engaged = matches!(self.phase, Phase::Flying { .. } | Phase::Settling { .. });
        if engaged
            && world
                .swarm()
                .any(|a| a.position.distance(&att_pos) < ctx.spec.collision_radius)
        {
            self.invalid_count += 1;
            events.push(EventKind::InvalidTestCase {
                target_id: self.current_target().unwrap_or_default(),
            });
            return self.new_epoch(EpochKind::Respawn, world, ctx, events);
        }
        match &mut self.phase {
            Phase::Waiting => {
                if world.t < self.params.launch_step {
                    Ok(AttackerAction::Hold)
                } else {
                    self.new_epoch(EpochKind::Initial, world, ctx, events)
                }
            }
            Phase::Flying {
                launch,
                target_id,
                steps,
            } => {
                *steps += 1;
                if launch.is_some_and(|p| p.distance(&att_pos) <= ARRIVAL_EPS) {
                    *launch = None;
                }
                let reached = world.agent(*target_id).map_or(true, |t| {
                    t.position.distance(&att_pos) <= CONTACT_FACTOR * ctx.spec.d_s
                });
                if (launch.is_none() && reached) || *steps > self.params.max_epoch_steps {
                    self.phase = Phase::Settling {
                        remaining: self.params.settle_steps,
                    };
                    return self.act(world, ctx, events);
                }
                let goal = match launch {
                    Some(p) => PilotGoal::Point(*p),
                    None => PilotGoal::Drone(*target_id),
                };
                Ok(pilot(world, goal, ctx.spec, ctx.attacker_speed))
            }
            Phase::Settling { remaining } | Phase::Retry { remaining, .. } if *remaining > 0 => {
                *remaining -= 1;
                Ok(AttackerAction::Hold)
            }
            Phase::Settling { .. } => self.new_epoch(EpochKind::Next, world, ctx, events),
            Phase::Retry { kind, .. } => {
                let kind = *kind;
                self.new_epoch(kind, world, ctx, events)
            }
            Phase::Done => Ok(AttackerAction::Halt),
        }
    }
}
