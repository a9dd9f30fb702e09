use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fuzz::FuzzError;
use crate::geometry::Vector;
use crate::sim::{AgentState, WorldState};

/// Ring around a target drone from which attackers are launched: inner radius
/// `r`, outer radius `big_r`, split into `n` equal sectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnGeometry {
    pub r: f64,
    pub big_r: f64,
    pub n: usize,
}

impl SpawnGeometry {
    pub fn new(r: f64, big_r: f64, n: usize) -> Result<Self, String> {
        if !(r > 0.0 && big_r > r) {
            return Err(format!("spawn geometry requires R > r > 0 (got r {r}, R {big_r})"));
        }
        if n < 2 {
            return Err(format!("spawn geometry requires n >= 2 (got {n})"));
        }
        Ok(Self { r, big_r, n })
    }

    pub fn mid_radius(&self) -> f64 {
        0.5 * (self.r + self.big_r)
    }

    /// Representative point of every sector, before any exclusion.
    pub fn sector_points(&self, center: &Vector) -> Vec<Vector> {
        let rho = self.mid_radius();
        let n = self.n as f64;
        (0..self.n)
            .map(|k| {
                let th = (2 * k + 1) as f64 * PI / n;
                let (s, c) = th.sin_cos();
                let mut p = *center;
                p = p.with_component(0, center.x() + rho * c);
                p.with_component(1, center.y() + rho * s)
            })
            .collect()
    }
}

/// Whether `p` is an admissible attacker spawn point: clear of obstacles and
/// every swarm drone by `d_s`, and outside every swarm drone's sensing disk.
pub fn spawn_point_is_valid(p: &Vector, world: &WorldState, d_s: f64) -> bool {
    world.obstacles.iter().all(|o| o.signed_distance(p) >= d_s)
        && world.swarm().all(|a| {
            let d = a.position.distance(p);
            d >= d_s && d > a.sensing_radius
        })
}

/// Admissible sector points around `target`, in sector order.
pub fn spawn_candidates(
    target: &AgentState,
    world: &WorldState,
    geom: &SpawnGeometry,
    d_s: f64,
) -> Result<Vec<Vector>, FuzzError> {
    let pts: Vec<Vector> = geom
        .sector_points(&target.position)
        .into_iter()
        .filter(|p| spawn_point_is_valid(p, world, d_s))
        .collect();
    if pts.is_empty() {
        return Err(FuzzError::NoValidSpawn {
            target_id: target.id,
        });
    }
    Ok(pts)
}
