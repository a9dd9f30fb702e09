//! Scenario files: everything needed to build a world, a controller and a
//! fuzzing setup. Keys carry their units (`_m`, `_mps`, `_s`, ...).

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Obstacle, Vector};
use crate::sim::{
    run_mission, AgentId, AgentState, ApfParams, ControllerKind, DispersalParams, MissionKind,
    MissionSpec, NoAttacker, Outcome, Role, SearchState, SimError, SwarmController, WorldState,
};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub id: AgentId,
    pub role: Role,
    pub start_m: Vector,
    pub d_cooleye_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formation_offset_m: Option<Vector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub kind: MissionKind,
    pub goal_tolerance_m: f64,
    pub d_s_m: f64,
    pub v_max_mps: f64,
    pub a_max_mps2: f64,
    pub d_m_m: f64,
    #[serde(rename = "d_M_m")]
    pub d_big_m_m: f64,
    pub dt_s: f64,
    #[serde(default = "defaults::timeout_multiplier")]
    pub timeout_multiplier: f64,
    /// Defaults to half the safe distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision_radius_m: Option<f64>,
    #[serde(default = "defaults::yes")]
    pub rob4_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub target_m: Vector,
    pub target_radius_m: f64,
    pub bounds_min_m: Vector,
    pub bounds_max_m: Vector,
    pub cell_size_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnConfig {
    /// Inner spawn radius; defaults to the target's sensing radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_m: Option<f64>,
    /// Outer radius as a multiple of the inner one.
    #[serde(default = "defaults::outer_factor")]
    pub outer_factor: f64,
    #[serde(default = "defaults::sectors")]
    pub sectors: usize,
}

impl Default for SpawnConfig {
    fn default() -> Self {
        Self {
            r_m: None,
            outer_factor: defaults::outer_factor(),
            sectors: defaults::sectors(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzConfig {
    #[serde(default = "defaults::lookahead")]
    pub lookahead_steps: usize,
    #[serde(default = "defaults::settle")]
    pub settle_steps: u64,
    /// Defaults to the swarm's `v_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker_speed_mps: Option<f64>,
    /// Defaults to twice the largest sensing radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_influence_m: Option<f64>,
    #[serde(default = "defaults::alpha_factor")]
    pub alpha_factor: f64,
    #[serde(default = "defaults::progress_window")]
    pub progress_window_steps: usize,
    /// Step at which the first test case is created.
    #[serde(default = "defaults::launch")]
    pub launch_step: u64,
    /// Longest flight toward one target; defaults to four lookahead horizons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_epoch_steps: Option<u64>,
    /// Number of test cases before the attack is abandoned; unlimited when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_epochs: Option<u64>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            lookahead_steps: defaults::lookahead(),
            settle_steps: defaults::settle(),
            attacker_speed_mps: None,
            d_influence_m: None,
            alpha_factor: defaults::alpha_factor(),
            progress_window_steps: defaults::progress_window(),
            launch_step: defaults::launch(),
            max_epoch_steps: None,
            budget_epochs: None,
        }
    }
}

mod defaults {
    pub fn timeout_multiplier() -> f64 {
        2.0
    }
    pub fn yes() -> bool {
        true
    }
    pub fn outer_factor() -> f64 {
        1.5
    }
    pub fn sectors() -> usize {
        8
    }
    pub fn lookahead() -> usize {
        10
    }
    pub fn settle() -> u64 {
        5
    }
    pub fn alpha_factor() -> f64 {
        0.85
    }
    pub fn progress_window() -> usize {
        20
    }
    pub fn launch() -> u64 {
        10
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dimension: u8,
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub leader_waypoints_m: Vec<Vector>,
    pub goal_m: Vector,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub mission: MissionConfig,
    /// Mean attacker-free completion time, in steps.
    pub nominal_steps: u64,
    pub controller: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    #[serde(default)]
    pub spawn: SpawnConfig,
    #[serde(default)]
    pub fuzz: FuzzConfig,
    /// Per-seed uniform perturbation of every start coordinate.
    #[serde(default)]
    pub start_jitter_m: f64,
}

/// Id given to the attack drone.
pub const ATTACKER_ID: AgentId = 1000;

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn mission_spec(&self) -> MissionSpec {
        let m = &self.mission;
        MissionSpec {
            goal: self.goal_m,
            goal_tolerance: m.goal_tolerance_m,
            d_s: m.d_s_m,
            v_max: m.v_max_mps,
            a_max: m.a_max_mps2,
            d_m: m.d_m_m,
            d_big_m: m.d_big_m_m,
            dt: m.dt_s,
            nominal_steps: self.nominal_steps,
            timeout_multiplier: m.timeout_multiplier,
            collision_radius: m.collision_radius_m.unwrap_or(0.5 * m.d_s_m),
            mission_kind: m.kind,
            rob4_enabled: m.rob4_enabled,
        }
    }

    pub fn build_controller(&self) -> SwarmController {
        self.controller.build()
    }

    pub fn attacker_speed(&self) -> f64 {
        self.fuzz
            .attacker_speed_mps
            .unwrap_or(self.mission.v_max_mps)
    }

    pub fn max_sensing_radius(&self) -> f64 {
        self.agents
            .iter()
            .map(|a| a.d_cooleye_m)
            .fold(0.0, f64::max)
    }

    pub fn d_influence(&self) -> f64 {
        self.fuzz
            .d_influence_m
            .unwrap_or(2.0 * self.max_sensing_radius())
    }

    pub fn max_epoch_steps(&self) -> u64 {
        self.fuzz
            .max_epoch_steps
            .unwrap_or(4 * self.fuzz.lookahead_steps as u64)
    }

    /// A point far away from everything, where the attacker waits before launch.
    pub fn attacker_park(&self) -> Vector {
        let mut far: f64 = 0.0;
        for a in &self.agents {
            far = far.max(a.start_m.norm());
        }
        for w in &self.leader_waypoints_m {
            far = far.max(w.norm());
        }
        far = far.max(self.goal_m.norm());
        let offset = 100.0 + 10.0 * far;
        let mut p = Vector::zeros(self.dimension);
        for i in 0..self.dimension as usize {
            p = p.with_component(i, offset);
        }
        p
    }

    pub fn parked_attacker(&self) -> AgentState {
        AgentState::new(
            ATTACKER_ID,
            Role::Attacker,
            self.attacker_park(),
            self.max_sensing_radius(),
        )
    }

    /// World at step 0; start positions are jittered from `seed`.
    pub fn initial_world(&self, seed: u64) -> WorldState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = self.start_jitter_m;
        let agents = self
            .agents
            .iter()
            .map(|a| {
                let mut pos = a.start_m;
                for i in 0..self.dimension as usize {
                    let delta = if j > 0.0 { rng.gen_range(-j..=j) } else { 0.0 };
                    pos = pos.with_component(i, pos.components()[i] + delta);
                }
                let mut st = AgentState::new(a.id, a.role, pos, a.d_cooleye_m);
                if let Some(off) = a.formation_offset_m {
                    st = st.with_offset(off);
                }
                st
            })
            .collect();
        let search = self.search.as_ref().map(|s| {
            SearchState::new(
                s.target_m,
                s.target_radius_m,
                s.bounds_min_m,
                s.bounds_max_m,
                s.cell_size_m,
            )
        });
        WorldState {
            t: 0,
            agents,
            obstacles: self.obstacles.clone(),
            leader_waypoints: self.leader_waypoints_m.clone(),
            waypoint_index: 0,
            search,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        let dim = self.dimension;
        if dim != 2 && dim != 3 {
            return bad(format!("dimension must be 2 or 3 (got {dim})"));
        }
        if self.agents.is_empty() {
            return bad("agents must not be empty".into());
        }
        let mut vectors: Vec<(&str, &Vector)> = vec![("goal_m", &self.goal_m)];
        let mut ids = BTreeSet::new();
        for a in &self.agents {
            if a.role == Role::Attacker {
                return bad(format!("agent {} cannot be an attacker", a.id));
            }
            if a.id == ATTACKER_ID {
                return bad(format!("agent id {ATTACKER_ID} is reserved for the attacker"));
            }
            if !ids.insert(a.id) {
                return bad(format!("agent ids must be unique (duplicate {})", a.id));
            }
            if !(a.d_cooleye_m > 0.0) {
                return bad(format!("d_cooleye_m of agent {} must be positive", a.id));
            }
            vectors.push(("start_m", &a.start_m));
            if let Some(o) = &a.formation_offset_m {
                vectors.push(("formation_offset_m", o));
            }
        }
        for w in &self.leader_waypoints_m {
            vectors.push(("leader_waypoints_m", w));
        }
        if let Some(s) = &self.search {
            vectors.push(("target_m", &s.target_m));
            vectors.push(("bounds_min_m", &s.bounds_min_m));
            vectors.push(("bounds_max_m", &s.bounds_max_m));
            if !(s.target_radius_m > 0.0) || !(s.cell_size_m > 0.0) {
                return bad("search radii must be positive".into());
            }
            if s.bounds_min_m.x() >= s.bounds_max_m.x() || s.bounds_min_m.y() >= s.bounds_max_m.y()
            {
                return bad("search bounds require min < max".into());
            }
        }
        for (name, v) in vectors {
            if v.dim() != dim {
                return bad(format!("{name} has dimension {} but scenario is {dim}-D", v.dim()));
            }
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for o in &self.obstacles {
            if o.dim() != dim {
                return bad(format!("obstacle dimension {} does not match {dim}", o.dim()));
            }
            o.validate().map_err(ScenarioError::Invalid)?;
        }
        for (i, a) in self.agents.iter().enumerate() {
            for b in &self.agents[i + 1..] {
                if a.start_m == b.start_m {
                    return bad(format!("agents {} and {} share a start position", a.id, b.id));
                }
            }
        }
        let spec = self.mission_spec();
        spec.validate(self.agents.iter().map(|a| a.d_cooleye_m))
            .map_err(ScenarioError::Invalid)?;
        match (&self.controller, self.mission.kind) {
            (ControllerKind::ApfNavigate(p), MissionKind::Navigate) => {
                if self.leader_waypoints_m.is_empty() {
                    return bad("apf_navigate requires leader_waypoints_m".into());
                }
                if self.agents.iter().filter(|a| a.role == Role::Leader).count() != 1 {
                    return bad("apf_navigate requires exactly one leader".into());
                }
                if !(p.influence_radius_m > 0.0) || !(p.k_rep >= 0.0) || !(p.k_att > 0.0) {
                    return bad("apf gains and influence radius must be positive".into());
                }
            }
            (ControllerKind::DispersalSearch(p), MissionKind::Search) => {
                if self.search.is_none() {
                    return bad("dispersal_search requires a search section".into());
                }
                if dim != 2 {
                    return bad("dispersal_search is 2-D only".into());
                }
                if !(p.agent_radius_m > 0.0) || !(p.ir_range_m > 0.0) {
                    return bad("dispersal radii must be positive".into());
                }
            }
            _ => return bad("controller kind does not match mission kind".into()),
        }
        if let Some(r) = self.spawn.r_m {
            if !(r > 0.0) {
                return bad("spawn r_m must be positive".into());
            }
        }
        if !(self.spawn.outer_factor > 1.0) {
            return bad("spawn requires R > r (outer_factor > 1)".into());
        }
        if self.spawn.sectors < 2 {
            return bad("spawn requires at least 2 sectors".into());
        }
        let f = &self.fuzz;
        if f.lookahead_steps == 0 {
            return bad("lookahead_steps must be >= 1".into());
        }
        if f.progress_window_steps == 0 {
            return bad("progress_window_steps must be >= 1".into());
        }
        if !(f.alpha_factor > 0.0 && f.alpha_factor < 1.0) {
            return bad("alpha_factor must lie in (0, 1)".into());
        }
        if !(self.attacker_speed() > 0.0) {
            return bad("attacker_speed_mps must be positive".into());
        }
        if !(self.d_influence() > 0.0) {
            return bad("d_influence_m must be positive".into());
        }
        if !(self.start_jitter_m >= 0.0) {
            return bad("start_jitter_m must be non-negative".into());
        }
        Ok(())
    }

    /// Reflection of the whole scenario across the hyperplane `axis = 0`.
    pub fn mirrored(&self, axis: usize) -> Scenario {
        let mut s = self.clone();
        for a in &mut s.agents {
            a.start_m = a.start_m.mirrored(axis);
            a.formation_offset_m = a.formation_offset_m.map(|o| o.mirrored(axis));
        }
        for w in &mut s.leader_waypoints_m {
            *w = w.mirrored(axis);
        }
        s.goal_m = s.goal_m.mirrored(axis);
        s.obstacles = s.obstacles.iter().map(|o| o.mirrored(axis)).collect();
        s
    }

    /// Sets the potential-field radius and every agent's sensing radius.
    pub fn with_influence_radius(&self, radius_m: f64) -> Scenario {
        let mut s = self.clone();
        if let ControllerKind::ApfNavigate(p) = &mut s.controller {
            p.influence_radius_m = radius_m;
        }
        for a in &mut s.agents {
            a.d_cooleye_m = radius_m;
        }
        s
    }

    /// Longest completion time, in steps, of `runs` attacker-free executions
    /// (seeds `0..runs`), so every reference run finishes within it. Fails if
    /// any reference run does not succeed.
    pub fn calibrate_nominal_steps(&self, runs: u64) -> Result<u64, SimError> {
        let mut probe = self.clone();
        probe.nominal_steps = 1_000_000;
        let controller = probe.build_controller();
        let mut longest = 0u64;
        for seed in 0..runs {
            let trace = run_mission(&probe, &controller, &mut NoAttacker, seed)?;
            if trace.outcome != Outcome::Success {
                return Err(SimError::InvalidState(format!(
                    "reference run {seed} ended with {:?}",
                    trace.outcome
                )));
            }
            longest = longest.max(trace.steps());
        }
        Ok(longest)
    }
}

/// Built-in scenarios modelled on the three evaluated swarm algorithms.
pub mod presets {
    use super::*;

    /// Four-drone leader–follower navigation through an obstacle field, with
    /// the given potential-field radius (also the drones' sensing radius).
    pub fn a1_navigate(influence_radius_m: f64) -> Scenario {
        let inter = 0.3;
        let offsets = [
            Vector::new2(0.0, 0.0),
            Vector::new2(-inter, 0.0),
            Vector::new2(0.0, -inter),
            Vector::new2(-inter, -inter),
        ];
        let start = Vector::new2(0.0, 0.0);
        let agents = offsets
            .iter()
            .enumerate()
            .map(|(i, off)| AgentConfig {
                id: i as AgentId,
                role: if i == 0 { Role::Leader } else { Role::Follower },
                start_m: start + *off,
                d_cooleye_m: influence_radius_m,
                formation_offset_m: if i == 0 { None } else { Some(*off) },
            })
            .collect();
        let goal = Vector::new2(4.0, 0.0);
        Scenario {
            name: "a1-navigate".into(),
            dimension: 2,
            agents,
            leader_waypoints_m: vec![Vector::new2(2.0, 0.0), goal],
            goal_m: goal,
            obstacles: vec![
                Obstacle::sphere(Vector::new2(2.5920, -0.4686), 0.0839),
                Obstacle::sphere(Vector::new2(2.9787, -0.6870), 0.0952),
                Obstacle::sphere(Vector::new2(2.4989, -0.4424), 0.0951),
                Obstacle::sphere(Vector::new2(1.4764, 0.4384), 0.0958),
                Obstacle::sphere(Vector::new2(3.0294, 0.1694), 0.0989),
                Obstacle::sphere(Vector::new2(2.5849, -0.3152), 0.0926),
                Obstacle::sphere(Vector::new2(1.5403, -0.0665), 0.1100),
                Obstacle::sphere(Vector::new2(1.6147, -0.0693), 0.0729),
                Obstacle::sphere(Vector::new2(3.2507, -0.6274), 0.1337),
            ],
            mission: MissionConfig {
                kind: MissionKind::Navigate,
                goal_tolerance_m: 0.05,
                d_s_m: 0.05,
                v_max_mps: 0.5,
                a_max_mps2: 1.5,
                d_m_m: 0.1,
                d_big_m_m: 0.6,
                dt_s: 0.1,
                timeout_multiplier: 2.0,
                collision_radius_m: None,
                rob4_enabled: true,
            },
            nominal_steps: 116,
            controller: ControllerKind::ApfNavigate(ApfParams {
                k_att: 2.0,
                k_rep: 0.02,
                influence_radius_m,
                ..ApfParams::default()
            }),
            search: None,
            spawn: SpawnConfig::default(),
            fuzz: FuzzConfig {
                attacker_speed_mps: Some(0.75),
                ..FuzzConfig::default()
            },
            start_jitter_m: 0.02,
        }
    }

    /// Coordinated search with dispersal control and no inter-drone avoidance.
    pub fn a2_search() -> Scenario {
        let agents = (0..4)
            .map(|i| AgentConfig {
                id: i,
                role: Role::Searcher,
                start_m: Vector::new2(1.0 + 1.0 * i as f64, 1.0),
                d_cooleye_m: 2.0,
                formation_offset_m: None,
            })
            .collect();
        let target = Vector::new2(16.0, 16.0);
        Scenario {
            name: "a2-search".into(),
            dimension: 2,
            agents,
            leader_waypoints_m: vec![],
            goal_m: target,
            obstacles: vec![
                Obstacle::aabb(Vector::new2(6.0, 6.0), Vector::new2(8.0, 12.0)),
                Obstacle::aabb(Vector::new2(11.0, 3.0), Vector::new2(14.0, 5.0)),
                Obstacle::sphere(Vector::new2(13.0, 12.0), 1.5),
            ],
            mission: MissionConfig {
                kind: MissionKind::Search,
                goal_tolerance_m: 1.0,
                d_s_m: 0.5,
                v_max_mps: 2.0,
                a_max_mps2: 6.0,
                d_m_m: 0.5,
                d_big_m_m: 30.0,
                dt_s: 0.1,
                timeout_multiplier: 2.0,
                collision_radius_m: None,
                rob4_enabled: false,
            },
            nominal_steps: 253,
            controller: ControllerKind::DispersalSearch(DispersalParams {
                agent_radius_m: 2.0,
                ir_range_m: 2.0,
                k_sep: 1.0,
                k_obs: 1.0,
            }),
            search: Some(SearchConfig {
                target_m: target,
                target_radius_m: 1.0,
                bounds_min_m: Vector::new2(0.0, 0.0),
                bounds_max_m: Vector::new2(20.0, 20.0),
                cell_size_m: 4.0,
            }),
            spawn: SpawnConfig::default(),
            fuzz: FuzzConfig::default(),
            start_jitter_m: 0.2,
        }
    }

    /// Three-dimensional potential-field navigation around large spheres.
    pub fn a3_navigate_3d() -> Scenario {
        let inter = 4.0;
        let offsets = [
            Vector::new3(0.0, 0.0, 0.0),
            Vector::new3(-inter, 0.0, 0.0),
            Vector::new3(0.0, -inter, 0.0),
            Vector::new3(0.0, 0.0, -inter),
        ];
        let agents = offsets
            .iter()
            .enumerate()
            .map(|(i, off)| AgentConfig {
                id: i as AgentId,
                role: if i == 0 { Role::Leader } else { Role::Follower },
                start_m: Vector::new3(0.0, 0.0, 10.0) + *off,
                d_cooleye_m: 2.0,
                formation_offset_m: if i == 0 { None } else { Some(*off) },
            })
            .collect();
        let goal = Vector::new3(60.0, 0.0, 10.0);
        Scenario {
            name: "a3-navigate-3d".into(),
            dimension: 3,
            agents,
            leader_waypoints_m: vec![Vector::new3(30.0, 0.0, 10.0), goal],
            goal_m: goal,
            obstacles: vec![
                Obstacle::sphere(Vector::new3(20.0, 7.0, 10.0), 4.0),
                Obstacle::sphere(Vector::new3(40.0, -8.0, 8.0), 4.0),
                Obstacle::sphere(Vector::new3(30.0, 6.0, 4.0), 2.0),
                Obstacle::sphere(Vector::new3(50.0, 5.0, 12.0), 2.0),
            ],
            mission: MissionConfig {
                kind: MissionKind::Navigate,
                goal_tolerance_m: 1.0,
                d_s_m: 1.0,
                v_max_mps: 5.0,
                a_max_mps2: 2.5,
                d_m_m: 1.5,
                d_big_m_m: 8.0,
                dt_s: 0.1,
                timeout_multiplier: 2.0,
                collision_radius_m: None,
                rob4_enabled: true,
            },
            nominal_steps: 132,
            controller: ControllerKind::ApfNavigate(ApfParams {
                k_att: 1.0,
                k_rep: 5.0,
                influence_radius_m: 2.0,
                waypoint_switch_m: 4.0,
            }),
            search: None,
            spawn: SpawnConfig::default(),
            fuzz: FuzzConfig::default(),
            start_jitter_m: 0.2,
        }
    }

    pub fn all() -> Vec<Scenario> {
        vec![a1_navigate(0.15), a2_search(), a3_navigate_3d()]
    }
}
