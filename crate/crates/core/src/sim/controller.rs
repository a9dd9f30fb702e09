//! Built-in swarm controllers.
//!
//! Two families are provided: a leader–follower artificial-potential-field
//! navigator and a dispersal-style searcher. Both are pure functions of the
//! world snapshot; per-step bookkeeping (waypoint switching, visit counting)
//! happens in [`Controller::after_step`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Vector;
use crate::sim::agent::{AgentId, AgentState, Role};
use crate::sim::world::{MissionSpec, WorldState};

pub type Commands = BTreeMap<AgentId, Vector>;

pub trait Controller {
    /// Velocity command for every swarm agent in `world`.
    fn commands(&self, world: &WorldState, spec: &MissionSpec) -> Commands;

    /// Bookkeeping after the world has been integrated by one step.
    fn after_step(&self, _world: &mut WorldState, _spec: &MissionSpec) {}
}

/// Repulsive velocity `k (1/d - 1/rho) / d^2` along `away`, capped at `cap`.
fn repulsion(k: f64, rho: f64, d: f64, away: Vector, cap: f64) -> Vector {
    if d >= rho {
        return Vector::zeros(away.dim());
    }
    if d <= 0.0 {
        return away * cap;
    }
    let mag = (k * (1.0 / d - 1.0 / rho) / (d * d)).min(cap);
    away * mag
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApfParams {
    #[serde(default = "ApfParams::default_k_att")]
    pub k_att: f64,
    #[serde(default = "ApfParams::default_k_rep")]
    pub k_rep: f64,
    /// Radius of the repulsive potential around obstacles and agents.
    pub influence_radius_m: f64,
    /// The leader moves on to the next waypoint once it is this close.
    #[serde(default = "ApfParams::default_switch")]
    pub waypoint_switch_m: f64,
}

impl ApfParams {
    fn default_k_att() -> f64 {
        1.0
    }
    fn default_k_rep() -> f64 {
        0.05
    }
    fn default_switch() -> f64 {
        0.3
    }
}

impl Default for ApfParams {
    fn default() -> Self {
        Self {
            k_att: 1.0,
            k_rep: 0.05,
            influence_radius_m: 0.15,
            waypoint_switch_m: 0.3,
        }
    }
}

/// Leader–follower navigation corrected by artificial potential fields.
///
/// The leader is attracted to its current waypoint; followers track a slot at
/// a fixed offset from the leader with the leader's velocity as feed-forward.
/// Every swarm member is repelled by obstacles and by other agents (attackers
/// included) closer than the influence radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ApfController {
    pub params: ApfParams,
}

impl ApfController {
    pub fn new(params: ApfParams) -> Self {
        Self { params }
    }

    fn leader_arrived(leader: &AgentState, world: &WorldState, spec: &MissionSpec) -> bool {
        world.on_final_waypoint()
            && leader.position.distance(&leader.goal_point(spec)) <= spec.goal_tolerance
    }

    fn attraction(&self, agent: &AgentState, world: &WorldState, spec: &MissionSpec) -> Vector {
        let zero = Vector::zeros(agent.position.dim());
        let seek_goal = |a: &AgentState| {
            let to_goal = a.goal_point(spec) - a.position;
            if to_goal.norm() <= spec.goal_tolerance {
                zero
            } else {
                (to_goal * self.params.k_att).clamp_norm(spec.v_max)
            }
        };
        match agent.role {
            Role::Leader => {
                if world.on_final_waypoint() {
                    return seek_goal(agent);
                }
                let wp = world.current_waypoint().copied().unwrap_or(spec.goal);
                ((wp - agent.position) * self.params.k_att).clamp_norm(spec.v_max)
            }
            _ => match world.leader() {
                Some(leader) if !Self::leader_arrived(leader, world, spec) => {
                    let slot = leader.position + agent.formation_offset;
                    (leader.velocity + (slot - agent.position) * self.params.k_att)
                        .clamp_norm(spec.v_max)
                }
                _ => seek_goal(agent),
            },
        }
    }

    fn repulsion_sum(&self, agent: &AgentState, world: &WorldState, spec: &MissionSpec) -> Vector {
        let rho = self.params.influence_radius_m;
        let k = self.params.k_rep;
        let mut total = Vector::zeros(agent.position.dim());
        for o in &world.obstacles {
            let d = o.signed_distance(&agent.position);
            if d < rho {
                total += repulsion(k, rho, d, o.outward_normal(&agent.position), spec.v_max);
            }
        }
        for other in &world.agents {
            if other.id == agent.id {
                continue;
            }
            let delta = agent.position - other.position;
            let d = delta.norm();
            if d < rho {
                // Coincident agents separate along the id order.
                let away = delta.unit().unwrap_or_else(|| {
                    let s = if agent.id < other.id { -1.0 } else { 1.0 };
                    Vector::zeros(agent.position.dim()).with_component(0, s)
                });
                total += repulsion(k, rho, d, away, spec.v_max);
            }
        }
        total
    }
}

impl Controller for ApfController {
    fn commands(&self, world: &WorldState, spec: &MissionSpec) -> Commands {
        world
            .swarm()
            .map(|a| {
                let cmd = self.attraction(a, world, spec) + self.repulsion_sum(a, world, spec);
                (a.id, cmd.clamp_norm(spec.v_max))
            })
            .collect()
    }

    fn after_step(&self, world: &mut WorldState, _spec: &MissionSpec) {
        if world.on_final_waypoint() {
            return;
        }
        let Some(leader) = world.leader() else { return };
        let Some(wp) = world.current_waypoint() else { return };
        if leader.position.distance(wp) <= self.params.waypoint_switch_m {
            world.waypoint_index += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersalParams {
    /// Neighbour detection radius.
    pub agent_radius_m: f64,
    /// Infrared proximity range used for obstacles, walls and intruders.
    pub ir_range_m: f64,
    #[serde(default = "DispersalParams::default_gain")]
    pub k_sep: f64,
    #[serde(default = "DispersalParams::default_gain")]
    pub k_obs: f64,
}

impl DispersalParams {
    fn default_gain() -> f64 {
        1.0
    }
}

/// Dispersal search: neighbours push each other apart, obstacles and walls
/// seen by the proximity sensor push searchers away, and each searcher drifts
/// toward the least-visited grid cell. There is no collision-avoidance term
/// between searchers beyond dispersal.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersalController {
    pub params: DispersalParams,
}

impl DispersalController {
    pub fn new(params: DispersalParams) -> Self {
        Self { params }
    }

    fn drift(&self, agent: &AgentState, world: &WorldState, spec: &MissionSpec) -> Vector {
        let zero = Vector::zeros(agent.position.dim());
        let Some(search) = world.search.as_ref() else {
            return zero;
        };
        let mut best: Option<(u32, f64, usize)> = None;
        for (cell, &count) in search.visits.iter().enumerate() {
            let d = search.cell_center(cell).distance(&agent.position);
            let key = (count, d, cell);
            let better = match best {
                None => true,
                Some(b) => key.0 < b.0 || (key.0 == b.0 && key.1 < b.1),
            };
            if better {
                best = Some(key);
            }
        }
        let Some((_, _, cell)) = best else { return zero };
        (search.cell_center(cell) - agent.position)
            .unit()
            .map(|u| u * spec.v_max)
            .unwrap_or(zero)
    }

    fn avoidance(&self, agent: &AgentState, world: &WorldState, spec: &MissionSpec) -> Vector {
        let ir = self.params.ir_range_m;
        let mut total = Vector::zeros(agent.position.dim());
        for o in &world.obstacles {
            let d = o.signed_distance(&agent.position);
            if d < ir {
                total += repulsion(
                    self.params.k_obs,
                    ir,
                    d,
                    o.outward_normal(&agent.position),
                    spec.v_max,
                );
            }
        }
        if let Some(search) = world.search.as_ref() {
            for axis in 0..2 {
                let p = agent.position.components()[axis];
                let lo = search.bounds_min.components()[axis];
                let hi = search.bounds_max.components()[axis];
                let unit = Vector::zeros(agent.position.dim()).with_component(axis, 1.0);
                total += repulsion(self.params.k_obs, ir, p - lo, unit, spec.v_max);
                total += repulsion(self.params.k_obs, ir, hi - p, -unit, spec.v_max);
            }
        }
        if let Some(att) = world.attacker() {
            let delta = agent.position - att.position;
            let d = delta.norm();
            if let Some(away) = delta.unit() {
                total += repulsion(self.params.k_obs, ir, d, away, spec.v_max);
            }
        }
        total
    }
}

impl Controller for DispersalController {
    fn commands(&self, world: &WorldState, spec: &MissionSpec) -> Commands {
        let mut out = Commands::new();
        for a in world.swarm() {
            let coincident: Vec<AgentId> = world
                .swarm()
                .filter(|o| o.position == a.position)
                .map(|o| o.id)
                .collect();
            if coincident.len() > 1 {
                // Fan coincident searchers out evenly by id rank.
                let rank = coincident.iter().filter(|&&id| id < a.id).count();
                let angle = std::f64::consts::TAU * rank as f64 / coincident.len() as f64;
                let dir = Vector::zeros(a.position.dim())
                    .with_component(0, angle.cos())
                    .with_component(1, angle.sin());
                out.insert(a.id, dir * spec.v_max);
                continue;
            }
            let r = self.params.agent_radius_m;
            let mut sep = Vector::zeros(a.position.dim());
            for o in world.swarm().filter(|o| o.id != a.id) {
                let delta = a.position - o.position;
                let d = delta.norm();
                if d < r {
                    if let Some(away) = delta.unit() {
                        sep += repulsion(self.params.k_sep, r, d, away, spec.v_max);
                    }
                }
            }
            let cmd = self.drift(a, world, spec) + sep + self.avoidance(a, world, spec);
            out.insert(a.id, cmd.clamp_norm(spec.v_max));
        }
        out
    }

    fn after_step(&self, world: &mut WorldState, _spec: &MissionSpec) {
        let positions: Vec<Vector> = world.swarm().map(|a| a.position).collect();
        if let Some(search) = world.search.as_mut() {
            search.observe(positions.iter());
        }
    }
}

/// Controller selected by a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerKind {
    ApfNavigate(ApfParams),
    DispersalSearch(DispersalParams),
}

impl ControllerKind {
    pub fn build(&self) -> SwarmController {
        match self {
            ControllerKind::ApfNavigate(p) => SwarmController::Apf(ApfController::new(*p)),
            ControllerKind::DispersalSearch(p) => {
                SwarmController::Dispersal(DispersalController::new(*p))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SwarmController {
    Apf(ApfController),
    Dispersal(DispersalController),
}

impl Controller for SwarmController {
    fn commands(&self, world: &WorldState, spec: &MissionSpec) -> Commands {
        match self {
            SwarmController::Apf(c) => c.commands(world, spec),
            SwarmController::Dispersal(c) => c.commands(world, spec),
        }
    }

    fn after_step(&self, world: &mut WorldState, spec: &MissionSpec) {
        match self {
            SwarmController::Apf(c) => c.after_step(world, spec),
            SwarmController::Dispersal(c) => c.after_step(world, spec),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Obstacle;
    use crate::sim::world::{MissionKind, SearchState};

    fn world(agents: Vec<AgentState>, obstacles: Vec<Obstacle>, waypoints: Vec<Vector>) -> WorldState {
        WorldState {
            t: 0,
            agents,
            obstacles,
            leader_waypoints: waypoints,
            waypoint_index: 0,
            search: None,
        }
    }

    fn nav_spec(goal: Vector) -> MissionSpec {
        MissionSpec {
            goal,
            ..MissionSpec::test_default(2)
        }
    }

    #[test]
    fn arrived_agent_gets_zero_command() {
        let goal = Vector::new2(1.0, 0.0);
        let a = AgentState::new(0, Role::Leader, Vector::new2(0.98, 0.01), 0.15);
        let w = world(vec![a], vec![], vec![goal]);
        let c = ApfController::new(ApfParams::default());
        let cmds = c.commands(&w, &nav_spec(goal));
        assert_eq!(cmds[&0], Vector::new2(0.0, 0.0));
    }

    #[test]
    fn lone_agent_heads_for_goal() {
        let goal = Vector::new2(1.0, 0.0);
        let a = AgentState::new(0, Role::Leader, Vector::new2(0.0, 0.0), 0.15);
        let w = world(vec![a], vec![], vec![goal]);
        let cmd = ApfController::new(ApfParams::default()).commands(&w, &nav_spec(goal))[&0];
        assert_eq!(cmd.unit().unwrap(), Vector::new2(1.0, 0.0));
    }

    #[test]
    fn mirrored_obstacles_cancel_laterally() {
        let goal = Vector::new2(1.0, 0.0);
        let a = AgentState::new(0, Role::Leader, Vector::new2(0.0, 0.0), 0.15);
        let obstacles = vec![
            Obstacle::sphere(Vector::new2(0.05, 0.15), 0.05),
            Obstacle::sphere(Vector::new2(0.05, -0.15), 0.05),
        ];
        let w = world(vec![a], obstacles, vec![goal]);
        let cmd = ApfController::new(ApfParams::default()).commands(&w, &nav_spec(goal))[&0];
        assert_eq!(cmd.y(), 0.0);
        assert!(cmd.x() > 0.0);
    }

    #[test]
    fn repulsion_is_capped_and_points_away() {
        let r = repulsion(0.05, 0.15, 0.01, Vector::new2(0.0, 1.0), 0.5);
        assert_eq!(r, Vector::new2(0.0, 0.5));
        let weak = repulsion(0.05, 0.15, 0.149, Vector::new2(0.0, 1.0), 0.5);
        assert!(weak.y() > 0.0 && weak.y() < 0.2);
        assert_eq!(repulsion(0.05, 0.15, 0.2, Vector::new2(0.0, 1.0), 0.5).y(), 0.0);
    }

    #[test]
    fn leader_switches_waypoints() {
        let a = AgentState::new(0, Role::Leader, Vector::new2(0.95, 0.0), 0.15);
        let mut w = world(vec![a], vec![], vec![Vector::new2(1.0, 0.0), Vector::new2(2.0, 0.0)]);
        let c = ApfController::new(ApfParams::default());
        c.after_step(&mut w, &nav_spec(Vector::new2(2.0, 0.0)));
        assert_eq!(w.waypoint_index, 1);
    }

    fn search_world(agents: Vec<AgentState>) -> WorldState {
        let mut w = world(agents, vec![], vec![]);
        w.search = Some(SearchState::new(
            Vector::new2(9.0, 9.0),
            1.0,
            Vector::new2(0.0, 0.0),
            Vector::new2(10.0, 10.0),
            2.0,
        ));
        w
    }

    fn search_spec() -> MissionSpec {
        MissionSpec {
            v_max: 2.0,
            dt: 0.5,
            mission_kind: MissionKind::Search,
            rob4_enabled: false,
            ..MissionSpec::test_default(2)
        }
    }

    fn dispersal() -> DispersalController {
        DispersalController::new(DispersalParams {
            agent_radius_m: 2.0,
            ir_range_m: 2.0,
            k_sep: 1.0,
            k_obs: 1.0,
        })
    }

    #[test]
    fn coincident_searchers_split_opposite() {
        let p = Vector::new2(5.0, 5.0);
        let w = search_world(vec![
            AgentState::new(0, Role::Searcher, p, 2.0),
            AgentState::new(1, Role::Searcher, p, 2.0),
        ]);
        let cmds = dispersal().commands(&w, &search_spec());
        let a = cmds[&0].unit().unwrap();
        let b = cmds[&1].unit().unwrap();
        assert!((a.dot(&b) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lone_searcher_drifts_to_unvisited_cell_within_speed() {
        let mut w = search_world(vec![AgentState::new(0, Role::Searcher, Vector::new2(5.0, 5.0), 2.0)]);
        // Everything visited except the top-right corner cell.
        let s = w.search.as_mut().unwrap();
        let corner = s.cell_of(&Vector::new2(9.5, 9.5));
        for (i, v) in s.visits.iter_mut().enumerate() {
            if i != corner {
                *v = 3;
            }
        }
        let spec = search_spec();
        let cmd = dispersal().commands(&w, &spec)[&0];
        assert!(cmd.norm() <= spec.v_max + 1e-12);
        assert!(cmd.x() > 0.0 && cmd.y() > 0.0);
    }

    #[test]
    fn searcher_inside_target_radius_detects_it() {
        let mut w = search_world(vec![AgentState::new(0, Role::Searcher, Vector::new2(8.4, 8.4), 2.0)]);
        dispersal().after_step(&mut w, &search_spec());
        assert!(w.search.as_ref().unwrap().detected);
        assert!(w.mission_complete(&search_spec()));
    }
}
