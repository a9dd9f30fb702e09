//! Discrete-time kinematic swarm world.

mod agent;
mod controller;
mod failure;
mod mission;
mod planner;
mod world;

pub use agent::{integrate_step, AgentId, AgentState, Role};
pub use controller::{
    ApfController, ApfParams, Commands, Controller, ControllerKind, DispersalController,
    DispersalParams, SwarmController,
};
pub use failure::{detect_failure, FailureKind};
pub use mission::{
    advance, run_mission, AttackerAction, AttackerPolicy, EventKind, NoAttacker, Outcome,
    StaticAttacker, StepContext, Trace,
};
pub use planner::{path_length, plan_path, sampled_clearance, segment_clearance, PlanningScene};
pub use world::{
    min_obstacle_distance, nearest_hazard_distance, MissionKind, MissionSpec, SearchState,
    WorldState,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}
