use serde::{Deserialize, Serialize};

use crate::geometry::{Obstacle, Vector};
use crate::sim::agent::{AgentId, AgentState, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionKind {
    Navigate,
    Search,
}

/// Mission-level constants shared by the controllers, the failure detector
/// and the robustness monitor.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionSpec {
    pub goal: Vector,
    pub goal_tolerance: f64,
    /// Minimum safe distance.
    pub d_s: f64,
    pub v_max: f64,
    pub a_max: f64,
    /// Formation lower pairwise bound.
    pub d_m: f64,
    /// Formation upper pairwise bound.
    pub d_big_m: f64,
    pub dt: f64,
    pub nominal_steps: u64,
    pub timeout_multiplier: f64,
    pub collision_radius: f64,
    pub mission_kind: MissionKind,
    /// When false the scenario has no inter-drone avoidance: the formation
    /// margin is left out of the sums and drone–drone contact is not a failure.
    pub rob4_enabled: bool,
}

impl MissionSpec {
    /// Last step index that still counts as on time.
    pub fn step_bound(&self) -> u64 {
        (self.nominal_steps as f64 * self.timeout_multiplier).floor() as u64
    }

    pub fn validate(&self, sensing_radii: impl IntoIterator<Item = f64>) -> Result<(), String> {
        let positive = [
            ("goal_tolerance_m", self.goal_tolerance),
            ("d_s_m", self.d_s),
            ("v_max_mps", self.v_max),
            ("a_max_mps2", self.a_max),
            ("d_m_m", self.d_m),
            ("d_M_m", self.d_big_m),
            ("dt_s", self.dt),
            ("collision_radius_m", self.collision_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("{name} must be positive and finite (got {v})"));
            }
        }
        if !(self.d_m < self.d_big_m) {
            return Err("formation bounds require d_m < d_M".into());
        }
        if !(self.timeout_multiplier >= 1.0) {
            return Err("timeout_multiplier must be >= 1".into());
        }
        if !(self.collision_radius < self.d_s) {
            return Err("collision_radius must be < d_s".into());
        }
        if self.nominal_steps == 0 {
            return Err("nominal_steps must be positive".into());
        }
        for r in sensing_radii {
            if !(self.d_s < r) {
                return Err(format!("d_s must be < every sensing radius (got d_s {} vs {r})", self.d_s));
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn test_default(dim: u8) -> Self {
        MissionSpec {
            goal: Vector::zeros(dim),
            goal_tolerance: 0.05,
            d_s: 0.05,
            v_max: 0.5,
            a_max: 1.0,
            d_m: 0.1,
            d_big_m: 0.6,
            dt: 0.1,
            nominal_steps: 150,
            timeout_multiplier: 2.0,
            collision_radius: 0.025,
            mission_kind: MissionKind::Navigate,
            rob4_enabled: true,
        }
    }
}

/// Occupancy bookkeeping for search missions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchState {
    pub target: Vector,
    pub target_radius: f64,
    pub detected: bool,
    pub bounds_min: Vector,
    pub bounds_max: Vector,
    pub cell_size: f64,
    pub cols: usize,
    pub rows: usize,
    pub visits: Vec<u32>,
}

impl SearchState {
    pub fn new(
        target: Vector,
        target_radius: f64,
        bounds_min: Vector,
        bounds_max: Vector,
        cell_size: f64,
    ) -> Self {
        let cols = (((bounds_max.x() - bounds_min.x()) / cell_size).ceil() as usize).max(1);
        let rows = (((bounds_max.y() - bounds_min.y()) / cell_size).ceil() as usize).max(1);
        Self {
            target,
            target_radius,
            detected: false,
            bounds_min,
            bounds_max,
            cell_size,
            cols,
            rows,
            visits: vec![0; cols * rows],
        }
    }

    pub fn cell_of(&self, p: &Vector) -> usize {
        let cx = ((p.x() - self.bounds_min.x()) / self.cell_size).floor();
        let cy = ((p.y() - self.bounds_min.y()) / self.cell_size).floor();
        let cx = (cx.max(0.0) as usize).min(self.cols - 1);
        let cy = (cy.max(0.0) as usize).min(self.rows - 1);
        cy * self.cols + cx
    }

    pub fn cell_center(&self, cell: usize) -> Vector {
        let cx = (cell % self.cols) as f64 + 0.5;
        let cy = (cell / self.cols) as f64 + 0.5;
        Vector::new2(
            self.bounds_min.x() + cx * self.cell_size,
            self.bounds_min.y() + cy * self.cell_size,
        )
    }

    /// Marks the cells occupied by `positions` and checks target detection.
    pub fn observe<'a>(&mut self, positions: impl IntoIterator<Item = &'a Vector>) {
        for p in positions {
            let cell = self.cell_of(p);
            self.visits[cell] += 1;
            if p.distance(&self.target) <= self.target_radius {
                self.detected = true;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub t: u64,
    pub agents: Vec<AgentState>,
    pub obstacles: Vec<Obstacle>,
    pub leader_waypoints: Vec<Vector>,
    /// Index of the waypoint the leader is currently heading for.
    pub waypoint_index: usize,
    pub search: Option<SearchState>,
}

impl WorldState {
    pub fn dim(&self) -> u8 {
        self.agents
            .first()
            .map(|a| a.position.dim())
            .unwrap_or(2)
    }

    pub fn swarm(&self) -> impl Iterator<Item = &AgentState> {
        self.agents.iter().filter(|a| a.role.is_swarm())
    }

    pub fn swarm_ids(&self) -> Vec<AgentId> {
        self.swarm().map(|a| a.id).collect()
    }

    pub fn attacker(&self) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.role == Role::Attacker)
    }

    pub fn attacker_mut(&mut self) -> Option<&mut AgentState> {
        self.agents.iter_mut().find(|a| a.role == Role::Attacker)
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn leader(&self) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.role == Role::Leader)
    }

    /// Copy of the world with agent `id` removed.
    pub fn without_agent(&self, id: AgentId) -> WorldState {
        let mut w = self.clone();
        w.agents.retain(|a| a.id != id);
        w
    }

    pub fn current_waypoint(&self) -> Option<&Vector> {
        self.leader_waypoints
            .get(self.waypoint_index.min(self.leader_waypoints.len().saturating_sub(1)))
    }

    pub fn on_final_waypoint(&self) -> bool {
        self.waypoint_index + 1 >= self.leader_waypoints.len()
    }

    /// Whether the mission objective has been met.
    pub fn mission_complete(&self, spec: &MissionSpec) -> bool {
        match spec.mission_kind {
            MissionKind::Navigate => {
                let mut any = false;
                for a in self.swarm() {
                    any = true;
                    if a.position.distance(&a.goal_point(spec)) > spec.goal_tolerance {
                        return false;
                    }
                }
                any
            }
            MissionKind::Search => self.search.as_ref().is_some_and(|s| s.detected),
        }
    }
}

/// Unclamped distance from `agent` to the nearest obstacle surface or other
/// agent center (attackers included). Infinite when the world is empty.
pub fn nearest_hazard_distance(agent: &AgentState, world: &WorldState) -> f64 {
    let obstacles = world
        .obstacles
        .iter()
        .map(|o| o.signed_distance(&agent.position));
    let agents = world
        .agents
        .iter()
        .filter(|o| o.id != agent.id)
        .map(|o| o.position.distance(&agent.position));
    obstacles.chain(agents).fold(f64::INFINITY, f64::min)
}

/// Distance used by the safe-distance margin, clamped into `[0, d_cooleye]`.
pub fn min_obstacle_distance(agent: &AgentState, world: &WorldState) -> f64 {
    nearest_hazard_distance(agent, world).clamp(0.0, agent.sensing_radius)
}
