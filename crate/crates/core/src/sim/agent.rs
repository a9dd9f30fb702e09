use serde::{Deserialize, Serialize};

use crate::geometry::Vector;
use crate::sim::{MissionSpec, SimError};

pub type AgentId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Leader,
    Follower,
    Searcher,
    Attacker,
}

impl Role {
    pub fn is_swarm(self) -> bool {
        self != Role::Attacker
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub role: Role,
    pub position: Vector,
    pub velocity: Vector,
    pub acceleration: Vector,
    pub sensing_radius: f64,
    /// Offset of this agent's slot from the leader (followers) and from the
    /// mission goal at completion. Zero for leaders and searchers.
    pub formation_offset: Vector,
}

impl AgentState {
    pub fn new(id: AgentId, role: Role, position: Vector, sensing_radius: f64) -> Self {
        let zero = Vector::zeros(position.dim());
        Self {
            id,
            role,
            position,
            velocity: zero,
            acceleration: zero,
            sensing_radius,
            formation_offset: zero,
        }
    }

    pub fn with_offset(mut self, offset: Vector) -> Self {
        self.formation_offset = offset;
        self
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    /// Where this agent should end up once the mission completes.
    pub fn goal_point(&self, spec: &MissionSpec) -> Vector {
        spec.goal + self.formation_offset
    }
}

/// Advances one agent by one explicit Euler step.
///
/// The velocity change is clamped to `a_max * dt`, the resulting speed to
/// `v_max`, and the position is moved by the new velocity.
pub fn integrate_step(
    agent: &AgentState,
    commanded_velocity: Vector,
    spec: &MissionSpec,
) -> Result<AgentState, SimError> {
    if !commanded_velocity.is_finite()
        || !agent.position.is_finite()
        || !agent.velocity.is_finite()
    {
        return Err(SimError::InvalidState(format!(
            "non-finite kinematics for agent {}",
            agent.id
        )));
    }
    let dv = (commanded_velocity - agent.velocity).clamp_norm(spec.a_max * spec.dt);
    // Radial clamping is the projection onto the speed ball, so when the old
    // velocity is inside the ball the applied change never exceeds |dv|.
    let velocity = (agent.velocity + dv).clamp_norm(spec.v_max);
    let acceleration = (velocity - agent.velocity) * (1.0 / spec.dt);
    let mut next = agent.clone();
    next.position = agent.position + velocity * spec.dt;
    next.velocity = velocity;
    next.acceleration = acceleration;
    Ok(next)
}
