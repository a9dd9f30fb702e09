//! Test-case selection: attacker guidance, candidate scoring and the
//! per-scheme choice of target drone and launch point.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::fuzz::spawn::{spawn_candidates, SpawnGeometry};
use crate::fuzz::{FuzzError, FuzzParams, TestCase};
use crate::geometry::Vector;
use crate::influence::{build_influence_graph, build_influence_subgraph, key_node_sequence};
use crate::robustness::RobustnessMonitor;
use crate::scenario::ATTACKER_ID;
use crate::sim::{
    advance, detect_failure, AgentId, AgentState, AttackerAction, Controller, FailureKind,
    MissionSpec, PlanningScene, Role, WorldState,
};

/// Everything a selection step reads besides the world itself.
pub struct FuzzContext<'a> {
    pub spec: &'a MissionSpec,
    pub controller: &'a dyn Controller,
    pub monitor: &'a RobustnessMonitor,
    pub params: &'a FuzzParams,
}

/// Penalty per swarm member subtracted from the score of a lookahead that
/// ends in a physical failure; larger than the whole robustness range.
const FAILURE_BONUS_PER_AGENT: f64 = 10.0;

/// Where the attacker is heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PilotGoal {
    /// A fixed point such as a launch position.
    Point(Vector),
    /// The current position of a swarm drone, approached to `d_s`.
    Drone(AgentId),
}

/// Velocity command that flies the attacker one step toward `goal`.
///
/// The route avoids obstacles and the safety disks of every swarm member
/// except the pursued one (and any disk the attacker already sits in). The
/// attacker never closes in below `d_s` on a drone and never enters an
/// obstacle, so it only ever acts through the swarm's own sensing.
pub fn pilot(world: &WorldState, goal: PilotGoal, spec: &MissionSpec, speed: f64) -> AttackerAction {
    let Some(att) = world.attacker() else {
        return AttackerAction::Hold;
    };
    let from = att.position;
    let (to, standoff, chased) = match goal {
        PilotGoal::Point(p) => (p, 0.0, None),
        PilotGoal::Drone(id) => match world.agent(id) {
            Some(a) => (a.position, spec.d_s, Some(id)),
            None => return AttackerAction::Hold,
        },
    };
    if from.distance(&to) <= standoff + 1e-9 {
        return AttackerAction::Hold;
    }
    let disks: Vec<Vector> = world
        .swarm()
        .filter(|a| {
            Some(a.id) != chased
                && a.position.distance(&from) >= spec.d_s
                && a.position.distance(&to) >= spec.d_s
        })
        .map(|a| a.position)
        .collect();
    let scene = PlanningScene::new(&world.obstacles, disks, spec.d_s);
    let path = scene.plan(from, to).unwrap_or_else(|_| vec![from, to]);
    let waypoint = path[1];
    let step = waypoint - from;
    let len = step.norm();
    // Only the final leg has to stop short of the pursued drone.
    let usable = if path.len() == 2 { len - standoff } else { len };
    if usable <= 1e-12 {
        return AttackerAction::Hold;
    }
    let v = step * (speed.min(usable / spec.dt) / len);
    let next = from + v * spec.dt;
    let intrudes = world.swarm().any(|a| {
        let dn = a.position.distance(&next);
        dn < spec.d_s - 1e-9 && dn < a.position.distance(&from)
    });
    let crashes = world.obstacles.iter().any(|o| o.signed_distance(&next) <= 0.0);
    if intrudes || crashes {
        AttackerAction::Hold
    } else {
        AttackerAction::Move(v)
    }
}

/// Swarm robustness after placing the attacker at `candidate` and letting it
/// pursue the target drone for the lookahead horizon. Lookaheads that end in a
/// physical failure score below every failure-free one. The real world is
/// not touched.
pub fn lookahead_score(
    world: &WorldState,
    candidate: &Vector,
    target_id: AgentId,
    ctx: &FuzzContext<'_>,
) -> f64 {
    let mut w = world.clone();
    place_attacker(&mut w, *candidate);
    let mut monitor = ctx.monitor.clone();
    let n = w.swarm().count() as f64;
    let speed = ctx.params.attacker_speed;
    for _ in 0..ctx.params.lookahead {
        let action = pilot(&w, PilotGoal::Drone(target_id), ctx.spec, speed);
        if advance(&mut w, ctx.spec, ctx.controller, action, speed).is_err() {
            return f64::NEG_INFINITY;
        }
        monitor.observe(&w);
        match detect_failure(&w, ctx.spec, ctx.spec.nominal_steps) {
            Some(FailureKind::Timeout) | None => {}
            Some(_) => return monitor.record(&w).swarm - FAILURE_BONUS_PER_AGENT * n,
        }
    }
    monitor.record(&w).swarm
}

/// Moves the attacker to `p` at rest, adding one if the world has none.
pub fn place_attacker(world: &mut WorldState, p: Vector) {
    match world.attacker_mut() {
        Some(a) => {
            a.position = p;
            a.velocity = Vector::zeros(p.dim());
            a.acceleration = Vector::zeros(p.dim());
        }
        None => {
            let r = world.swarm().map(|a| a.sensing_radius).fold(0.0, f64::max);
            world
                .agents
                .push(AgentState::new(ATTACKER_ID, Role::Attacker, p, r.max(1e-3)));
        }
    }
}

pub fn geometry_for(target: &AgentState, params: &FuzzParams) -> SpawnGeometry {
    let r = params.spawn_r.unwrap_or(target.sensing_radius);
    SpawnGeometry {
        r,
        big_r: r * params.outer_factor,
        n: params.sectors,
    }
}

/// Index of the lowest score; the first index wins ties.
pub fn argmin(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.map_or(true, |b| s < scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Scores every candidate and returns the test case at the best one.
pub fn best_test_case(
    world: &WorldState,
    target: &AgentState,
    candidates: &[Vector],
    ctx: &FuzzContext<'_>,
) -> TestCase {
    let scores: Vec<f64> = candidates
        .iter()
        .map(|c| lookahead_score(world, c, target.id, ctx))
        .collect();
    let k = argmin(&scores).expect("candidate list is never empty");
    TestCase {
        step: world.t,
        target_id: target.id,
        p_t: target.position,
        p_a: candidates[k],
    }
}

fn key_node_among(
    world: &WorldState,
    ctx: &FuzzContext<'_>,
    nodes: Option<&[AgentId]>,
) -> Result<AgentId, FuzzError> {
    let graph = match nodes {
        Some(ns) => build_influence_subgraph(world, ctx.controller, ctx.spec, ctx.params.d_influence, ns),
        None => build_influence_graph(world, ctx.controller, ctx.spec, ctx.params.d_influence),
    };
    let seq = key_node_sequence(&graph, ctx.params.alpha_factor)?;
    seq.key_node()
        .ok_or_else(|| FuzzError::Sim(crate::sim::SimError::InvalidState("empty swarm".into())))
}

/// Key node of the whole swarm.
pub fn key_node(world: &WorldState, ctx: &FuzzContext<'_>) -> Result<AgentId, FuzzError> {
    key_node_among(world, ctx, None)
}

fn swarm_agent(world: &WorldState, id: AgentId) -> &AgentState {
    world.agent(id).expect("ranked ids come from the world")
}

/// Initial test case: global key node as target, best-scoring spawn point.
pub fn init_test_case(world: &WorldState, ctx: &FuzzContext<'_>) -> Result<TestCase, FuzzError> {
    let target = swarm_agent(world, key_node(world, ctx)?);
    let geom = geometry_for(target, ctx.params);
    let candidates = spawn_candidates(target, world, &geom, ctx.spec.d_s)?;
    Ok(best_test_case(world, target, &candidates, ctx))
}

/// Global re-selection: the attacker may appear anywhere.
pub fn ma_next_testcase(world: &WorldState, ctx: &FuzzContext<'_>) -> Result<TestCase, FuzzError> {
    init_test_case(world, ctx)
}

/// Swarm members whose sensing disk intersects the attacker's reachable disk.
pub fn reachable_members(world: &WorldState, attacker: &Vector, reach: f64) -> Vec<AgentId> {
    world
        .swarm()
        .filter(|a| a.position.distance(attacker) <= reach + a.sensing_radius)
        .map(|a| a.id)
        .collect()
}

/// Local re-selection: the key node among the drones the attacker can reach
/// within one lookahead horizon, launched from a point inside that reach.
pub fn sa_next_testcase(
    world: &WorldState,
    attacker: &Vector,
    ctx: &FuzzContext<'_>,
) -> Result<TestCase, FuzzError> {
    let reach = ctx.params.reach_radius;
    let members = reachable_members(world, attacker, reach);
    let target = if members.is_empty() {
        let nearest = world
            .swarm()
            .min_by(|a, b| {
                a.position
                    .distance(attacker)
                    .total_cmp(&b.position.distance(attacker))
                    .then(a.id.cmp(&b.id))
            })
            .ok_or_else(|| FuzzError::Sim(crate::sim::SimError::InvalidState("empty swarm".into())))?;
        nearest
    } else {
        swarm_agent(world, key_node_among(world, ctx, Some(&members))?)
    };
    let geom = geometry_for(target, ctx.params);
    let all = spawn_candidates(target, world, &geom, ctx.spec.d_s)?;
    let mut within: Vec<Vector> = all
        .iter()
        .copied()
        .filter(|c| c.distance(attacker) <= reach)
        .collect();
    if within.is_empty() {
        let nearest = all
            .iter()
            .copied()
            .min_by(|a, b| a.distance(attacker).total_cmp(&b.distance(attacker)))
            .expect("spawn_candidates is never empty");
        within.push(nearest);
    }
    Ok(best_test_case(world, target, &within, ctx))
}

/// Uniformly random target drone.
pub fn random_target<R: Rng>(rng: &mut R, ids: &[AgentId]) -> Option<AgentId> {
    ids.choose(rng).copied()
}

/// Random target and a uniformly random admissible spawn point.
pub fn random_test_case<R: Rng>(
    world: &WorldState,
    ctx: &FuzzContext<'_>,
    rng: &mut R,
) -> Result<TestCase, FuzzError> {
    let ids = world.swarm_ids();
    let id = random_target(rng, &ids)
        .ok_or_else(|| FuzzError::Sim(crate::sim::SimError::InvalidState("empty swarm".into())))?;
    random_spawn_for(world, id, ctx, rng)
}

/// Fixed target with a uniformly random admissible spawn point.
pub fn random_spawn_for<R: Rng>(
    world: &WorldState,
    target_id: AgentId,
    ctx: &FuzzContext<'_>,
    rng: &mut R,
) -> Result<TestCase, FuzzError> {
    let target = swarm_agent(world, target_id);
    let geom = geometry_for(target, ctx.params);
    let candidates = spawn_candidates(target, world, &geom, ctx.spec.d_s)?;
    let p_a = *candidates.choose(rng).expect("non-empty");
    Ok(TestCase {
        step: world.t,
        target_id,
        p_t: target.position,
        p_a,
    })
}
