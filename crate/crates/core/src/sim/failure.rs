use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sim::world::{MissionSpec, WorldState};

/// Physical mission-failure causes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    DronesCollide,
    ObstacleCrash,
    Timeout,
}

impl FailureKind {
    pub const ALL: [FailureKind; 3] = [
        FailureKind::DronesCollide,
        FailureKind::ObstacleCrash,
        FailureKind::Timeout,
    ];

    pub fn description(self) -> &'static str {
        match self {
            FailureKind::DronesCollide => "Drones collide with each other",
            FailureKind::ObstacleCrash => "The drone crashes into an obstacle",
            FailureKind::Timeout => "The swarm timed out without completing the mission",
        }
    }
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureKind::DronesCollide => "drones_collide",
            FailureKind::ObstacleCrash => "obstacle_crash",
            FailureKind::Timeout => "timeout",
        })
    }
}

/// Classifies the world at step `world.t`.
///
/// Contact between swarm members and obstacles is checked first, then
/// drone–drone contact, then the step bound. Attackers never produce a
/// failure: touching a victim invalidates the test case instead.
pub fn detect_failure(
    world: &WorldState,
    spec: &MissionSpec,
    nominal_steps: u64,
) -> Option<FailureKind> {
    let swarm: Vec<_> = world.swarm().collect();
    for a in &swarm {
        if world
            .obstacles
            .iter()
            .any(|o| o.signed_distance(&a.position) <= 0.0)
        {
            return Some(FailureKind::ObstacleCrash);
        }
    }
    if spec.rob4_enabled {
        for (i, a) in swarm.iter().enumerate() {
            for b in &swarm[i + 1..] {
                if a.position.distance(&b.position) < spec.collision_radius {
                    return Some(FailureKind::DronesCollide);
                }
            }
        }
    }
    let bound = (nominal_steps as f64 * spec.timeout_multiplier).floor() as u64;
    if world.t > bound && !world.mission_complete(spec) {
        return Some(FailureKind::Timeout);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Obstacle, Vector};
    use crate::sim::agent::{AgentState, Role};

    fn world(agents: Vec<AgentState>, t: u64) -> WorldState {
        WorldState {
            t,
            agents,
            obstacles: vec![Obstacle::sphere(Vector::new2(5.0, 5.0), 0.5)],
            leader_waypoints: vec![],
            waypoint_index: 0,
            search: None,
        }
    }

    fn spec() -> MissionSpec {
        MissionSpec {
            collision_radius: 0.05,
            d_s: 0.1,
            goal: Vector::new2(10.0, 0.0),
            ..MissionSpec::test_default(2)
        }
    }

    #[test]
    fn close_pair_collides() {
        let w = world(
            vec![
                AgentState::new(0, Role::Leader, Vector::new2(0.0, 0.0), 0.2),
                AgentState::new(1, Role::Follower, Vector::new2(0.04, 0.0), 0.2),
            ],
            3,
        );
        assert_eq!(detect_failure(&w, &spec(), 150), Some(FailureKind::DronesCollide));
    }

    #[test]
    fn collisions_suppressed_without_inter_drone_avoidance() {
        let w = world(
            vec![
                AgentState::new(0, Role::Searcher, Vector::new2(0.0, 0.0), 0.2),
                AgentState::new(1, Role::Searcher, Vector::new2(0.0, 0.0), 0.2),
            ],
            3,
        );
        let s = MissionSpec {
            rob4_enabled: false,
            ..spec()
        };
        assert_eq!(detect_failure(&w, &s, 150), None);
    }

    #[test]
    fn attacker_contact_is_not_a_failure() {
        let w = world(
            vec![
                AgentState::new(0, Role::Leader, Vector::new2(0.0, 0.0), 0.2),
                AgentState::new(9, Role::Attacker, Vector::new2(0.0, 0.0), 0.2),
            ],
            3,
        );
        assert_eq!(detect_failure(&w, &spec(), 150), None);
    }

    #[test]
    fn touching_obstacle_crashes() {
        let w = world(vec![AgentState::new(0, Role::Leader, Vector::new2(5.5, 5.0), 0.2)], 3);
        assert_eq!(detect_failure(&w, &spec(), 150), Some(FailureKind::ObstacleCrash));
    }

    #[test]
    fn timeout_strictly_after_twice_nominal() {
        let a = AgentState::new(0, Role::Leader, Vector::new2(0.0, 0.0), 0.2);
        assert_eq!(detect_failure(&world(vec![a.clone()], 300), &spec(), 150), None);
        assert_eq!(
            detect_failure(&world(vec![a], 301), &spec(), 150),
            Some(FailureKind::Timeout)
        );
    }

    #[test]
    fn completed_mission_never_times_out() {
        let a = AgentState::new(0, Role::Leader, Vector::new2(10.0, 0.01), 0.2);
        assert_eq!(detect_failure(&world(vec![a], 500), &spec(), 150), None);
    }
}
