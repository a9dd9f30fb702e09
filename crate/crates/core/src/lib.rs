//! Swarm simulation, constraint robustness, influence analysis and
//! robustness-guided fuzzing of swarm control algorithms.

pub mod fuzz;
pub mod geometry;
pub mod influence;
pub mod robustness;
pub mod scenario;
pub mod sim;
