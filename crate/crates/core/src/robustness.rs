//! Quantitative constraint margins for swarm members.
//!
//! Each agent gets five signed margins (positive = satisfied, `<= 0` =
//! violated), each normalised into `[-1, 1]`:
//!
//! | index | constraint            | raw margin                               |
//! |-------|-----------------------|------------------------------------------|
//! | 0     | safe distance         | `d - d_s`                                |
//! | 1     | speed bound           | `v_max - |v|`                            |
//! | 2     | acceleration bound    | `a_max - |a|`                            |
//! | 3     | formation band        | `min(min d - d_m, d_M - max d)`          |
//! | 4     | progress (eventually) | windowed max of per-step goal approach   |
//!
//! Individual robustness is the sum of the applicable normalised margins and
//! swarm robustness the sum over agents.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sim::{min_obstacle_distance, AgentId, AgentState, MissionSpec, WorldState};

pub const MARGIN_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    SafeDistance,
    Speed,
    Acceleration,
    Formation,
    Progress,
}

impl Constraint {
    pub const ALL: [Constraint; MARGIN_COUNT] = [
        Constraint::SafeDistance,
        Constraint::Speed,
        Constraint::Acceleration,
        Constraint::Formation,
        Constraint::Progress,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::SafeDistance => "safe_distance",
            Constraint::Speed => "speed",
            Constraint::Acceleration => "acceleration",
            Constraint::Formation => "formation",
            Constraint::Progress => "progress",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintParams {
    pub d_s: f64,
    pub d_cooleye: f64,
    pub v_max: f64,
    pub a_max: f64,
    pub d_m: f64,
    pub d_big_m: f64,
    pub dt: f64,
    /// Window length, in steps, of the progress constraint.
    pub progress_window: usize,
    pub rob4_enabled: bool,
}

impl ConstraintParams {
    pub fn from_mission(spec: &MissionSpec, d_cooleye: f64, progress_window: usize) -> Self {
        Self {
            d_s: spec.d_s,
            d_cooleye,
            v_max: spec.v_max,
            a_max: spec.a_max,
            d_m: spec.d_m,
            d_big_m: spec.d_big_m,
            dt: spec.dt,
            progress_window,
            rob4_enabled: spec.rob4_enabled,
        }
    }

    pub fn with_sensing(self, d_cooleye: f64) -> Self {
        Self { d_cooleye, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub raw: f64,
    pub normalized: f64,
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(-1.0, 1.0)
}

/// Safe-distance margin for a clamped hazard distance `d`.
pub fn margin_safe_distance(d: f64, params: &ConstraintParams) -> Margin {
    let raw = d - params.d_s;
    let normalized = if raw >= 0.0 {
        raw / (params.d_cooleye - params.d_s)
    } else {
        raw / params.d_s
    };
    Margin {
        raw,
        normalized: clamp_unit(normalized),
    }
}

/// Speed and acceleration margins.
pub fn margin_kinematics(speed: f64, accel: f64, params: &ConstraintParams) -> (Margin, Margin) {
    let raw_v = params.v_max - speed;
    let raw_a = params.a_max - accel;
    (
        Margin {
            raw: raw_v,
            normalized: clamp_unit(raw_v / params.v_max),
        },
        Margin {
            raw: raw_a,
            normalized: clamp_unit(raw_a / params.a_max),
        },
    )
}

/// Formation-band margin over the distances to every other swarm member.
/// A lone agent has the full margin.
pub fn margin_formation(pairwise: &[f64], params: &ConstraintParams) -> Margin {
    let half_band = 0.5 * (params.d_big_m - params.d_m);
    if pairwise.is_empty() {
        return Margin {
            raw: half_band,
            normalized: 1.0,
        };
    }
    let lo = pairwise.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pairwise.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = (lo - params.d_m).min(params.d_big_m - hi);
    Margin {
        raw,
        normalized: clamp_unit(raw / half_band),
    }
}

/// Progress margin from the most recent goal distances (oldest first).
/// The raw value is the best single-step approach within the window.
pub fn margin_progress(goal_distances: &[f64], params: &ConstraintParams) -> Margin {
    debug_assert!(goal_distances.len() >= 2);
    let raw = goal_distances
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::NEG_INFINITY, f64::max);
    Margin {
        raw,
        normalized: clamp_unit(raw / (params.v_max * params.dt)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRobustness {
    pub id: AgentId,
    pub raw: [f64; MARGIN_COUNT],
    pub norm: [f64; MARGIN_COUNT],
    pub d_g: f64,
    #[serde(rename = "ind")]
    pub individual: f64,
}

impl AgentRobustness {
    fn applicable(&self, rob4_enabled: bool) -> impl Iterator<Item = Constraint> {
        Constraint::ALL
            .into_iter()
            .filter(move |c| rob4_enabled || *c != Constraint::Formation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRecord {
    pub per_agent: Vec<AgentRobustness>,
    pub swarm: f64,
    #[serde(rename = "min")]
    pub min_margin: f64,
    #[serde(rename = "rob4")]
    pub rob4_enabled: bool,
}

/// Margins of one agent given its recent goal distances (oldest first, the
/// last entry is the current step).
pub fn individual_robustness(
    agent: &AgentState,
    world: &WorldState,
    goal_history: &[f64],
    params: &ConstraintParams,
) -> AgentRobustness {
    let params = params.with_sensing(agent.sensing_radius);
    let m1 = margin_safe_distance(min_obstacle_distance(agent, world), &params);
    let (m2, m3) = margin_kinematics(agent.speed(), agent.acceleration.norm(), &params);
    let pairwise: Vec<f64> = world
        .swarm()
        .filter(|o| o.id != agent.id)
        .map(|o| o.position.distance(&agent.position))
        .collect();
    let m4 = margin_formation(&pairwise, &params);
    let m5 = margin_progress(goal_history, &params);
    let ms = [m1, m2, m3, m4, m5];
    let mut out = AgentRobustness {
        id: agent.id,
        raw: ms.map(|m| m.raw),
        norm: ms.map(|m| m.normalized),
        d_g: *goal_history.last().unwrap_or(&f64::NAN),
        individual: 0.0,
    };
    out.individual = out
        .applicable(params.rob4_enabled)
        .map(|c| out.norm[c.index()])
        .sum();
    out
}

/// Sum of individual robustness over the swarm.
pub fn swarm_robustness(
    world: &WorldState,
    histories: &BTreeMap<AgentId, VecDeque<f64>>,
    params: &ConstraintParams,
) -> RobustnessRecord {
    let mut per_agent = Vec::new();
    for agent in world.swarm() {
        let hist: Vec<f64> = histories
            .get(&agent.id)
            .map(|h| h.iter().copied().collect())
            .unwrap_or_default();
        per_agent.push(individual_robustness(agent, world, &hist, params));
    }
    let swarm = per_agent.iter().map(|a| a.individual).sum();
    let min_margin = per_agent
        .iter()
        .flat_map(|a| a.applicable(params.rob4_enabled).map(|c| a.norm[c.index()]))
        .fold(f64::INFINITY, f64::min);
    RobustnessRecord {
        per_agent,
        swarm,
        min_margin,
        rob4_enabled: params.rob4_enabled,
    }
}

/// Every (agent, constraint) pair whose raw margin is `<= 0`.
pub fn constraint_violations(record: &RobustnessRecord) -> Vec<(AgentId, Constraint)> {
    record
        .per_agent
        .iter()
        .flat_map(|a| {
            a.applicable(record.rob4_enabled)
                .filter(|c| a.raw[c.index()] <= 0.0)
                .map(move |c| (a.id, c))
        })
        .collect()
}

/// Tracks each swarm member's distance to its goal point over a sliding
/// window and turns world snapshots into [`RobustnessRecord`]s.
#[derive(Debug, Clone)]
pub struct RobustnessMonitor {
    params: ConstraintParams,
    goal: MissionSpec,
    histories: BTreeMap<AgentId, VecDeque<f64>>,
}

impl RobustnessMonitor {
    pub fn new(spec: &MissionSpec, progress_window: usize) -> Self {
        // d_cooleye is replaced per agent when margins are evaluated.
        let params = ConstraintParams::from_mission(spec, f64::INFINITY, progress_window.max(1));
        Self {
            params,
            goal: spec.clone(),
            histories: BTreeMap::new(),
        }
    }

    pub fn params(&self) -> &ConstraintParams {
        &self.params
    }

    /// Appends the current goal distances of every swarm member.
    pub fn observe(&mut self, world: &WorldState) {
        let cap = self.params.progress_window + 1;
        for a in world.swarm() {
            let h = self.histories.entry(a.id).or_default();
            h.push_back(a.position.distance(&a.goal_point(&self.goal)));
            while h.len() > cap {
                h.pop_front();
            }
        }
    }

    pub fn record(&self, world: &WorldState) -> RobustnessRecord {
        swarm_robustness(world, &self.histories, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vector;
    use crate::sim::Role;

    fn params() -> ConstraintParams {
        ConstraintParams {
            d_s: 0.05,
            d_cooleye: 0.15,
            v_max: 0.5,
            a_max: 1.0,
            d_m: 0.1,
            d_big_m: 0.6,
            dt: 0.1,
            progress_window: 20,
            rob4_enabled: true,
        }
    }

    #[test]
    fn safe_distance_boundaries() {
        let p = params();
        assert_eq!(margin_safe_distance(0.05, &p), Margin { raw: 0.0, normalized: 0.0 });
        let m = margin_safe_distance(0.15, &p);
        assert!((m.raw - 0.10).abs() < 1e-15);
        assert!((m.normalized - 1.0).abs() < 1e-12);
        assert_eq!(margin_safe_distance(0.0, &p), Margin { raw: -0.05, normalized: -1.0 });
    }

    #[test]
    fn kinematic_boundaries() {
        let p = params();
        assert_eq!(margin_kinematics(0.0, 0.0, &p).0.normalized, 1.0);
        assert_eq!(margin_kinematics(0.5, 0.0, &p).0.normalized, 0.0);
        assert_eq!(margin_kinematics(0.1, 1.0, &p).1.normalized, 0.0);
    }

    #[test]
    fn formation_band() {
        let p = params();
        assert!((margin_formation(&[0.35, 0.35], &p).normalized - 1.0).abs() < 1e-12);
        let m = margin_formation(&[0.1, 0.3], &p);
        assert_eq!(m.raw, 0.0);
        assert_eq!(m.normalized, 0.0);
        assert!(margin_formation(&[0.3, 0.7], &p).raw < 0.0);
        assert_eq!(margin_formation(&[], &p).normalized, 1.0);
    }

    #[test]
    fn progress_semantics() {
        let p = params();
        let full: Vec<f64> = (0..21).map(|k| 10.0 - 0.05 * k as f64).collect();
        assert!((margin_progress(&full, &p).normalized - 1.0).abs() < 1e-9);
        assert_eq!(margin_progress(&[2.0; 21], &p), Margin { raw: 0.0, normalized: 0.0 });
        let retreat: Vec<f64> = (0..21).map(|k| 1.0 + 0.01 * k as f64).collect();
        assert!(margin_progress(&retreat, &p).raw < 0.0);
    }

    fn lone_world(a: AgentState) -> WorldState {
        WorldState {
            t: 1,
            agents: vec![a],
            obstacles: vec![],
            leader_waypoints: vec![],
            waypoint_index: 0,
            search: None,
        }
    }

    #[test]
    fn all_margins_at_maximum_sum_to_five() {
        let a = AgentState::new(0, Role::Leader, Vector::new2(0.0, 0.0), 0.15);
        let w = lone_world(a.clone());
        let r = individual_robustness(&a, &w, &[1.05, 1.0], &params());
        assert!((r.individual - 5.0).abs() < 1e-12, "{:?}", r);
    }

    #[test]
    fn formation_excluded_when_disabled() {
        let a = AgentState::new(0, Role::Searcher, Vector::new2(0.0, 0.0), 0.15);
        let w = lone_world(a.clone());
        let p = ConstraintParams {
            rob4_enabled: false,
            ..params()
        };
        let r = individual_robustness(&a, &w, &[1.05, 1.0], &p);
        assert!((r.individual - 4.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_distance_is_one_violation() {
        let a = AgentState::new(0, Role::Leader, Vector::new2(0.0, 0.0), 0.15);
        let mut w = lone_world(a.clone());
        w.obstacles.push(crate::geometry::Obstacle::sphere(Vector::new2(0.25, 0.0), 0.2));
        let mut h = BTreeMap::new();
        h.insert(0, VecDeque::from(vec![1.05, 1.0]));
        let rec = swarm_robustness(&w, &h, &params());
        assert_eq!(constraint_violations(&rec), vec![(0, Constraint::SafeDistance)]);
        assert!(rec.min_margin <= 0.0);
    }

    #[test]
    fn swarm_sum_and_permutation() {
        let agents: Vec<AgentState> = (0..4)
            .map(|i| AgentState::new(i, Role::Follower, Vector::new2(i as f64 * 0.3, 0.0), 0.15))
            .collect();
        let mut h = BTreeMap::new();
        for i in 0..4 {
            h.insert(i, VecDeque::from(vec![1.0, 0.99]));
        }
        let mut w = lone_world(agents[0].clone());
        w.agents = agents.clone();
        let a = swarm_robustness(&w, &h, &params());
        let sum: f64 = a.per_agent.iter().map(|r| r.individual).sum();
        assert_eq!(a.swarm, sum);
        w.agents.reverse();
        let b = swarm_robustness(&w, &h, &params());
        assert!((a.swarm - b.swarm).abs() < 1e-12);
    }
}
