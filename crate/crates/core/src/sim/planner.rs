//! Shortest clearance-respecting polylines around obstacles.
//!
//! Obstacles and agent safety disks are inflated by the clearance and
//! replaced by circumscribing vertex sets (polygons around circles, sampled
//! shells around spheres, corners of inflated boxes). A visibility graph over
//! those vertices is searched with Dijkstra; every candidate edge is checked
//! exactly against the original shapes, so any returned path keeps the
//! requested clearance.

use std::f64::consts::PI;

use crate::geometry::{closest_point_on_segment, Obstacle, Vector};
use crate::sim::world::WorldState;
use crate::sim::SimError;

const CIRCLE_VERTICES: usize = 12;
const SHELL_VERTICES: usize = 32;
const EDGE_TOLERANCE: f64 = 1e-9;
const INFLATE_SLACK: f64 = 1e-6;

/// Unsigned distance from the segment `a`–`b` to an axis-aligned box
/// (zero when they intersect).
fn segment_box_distance(a: &Vector, b: &Vector, min: &Vector, max: &Vector) -> f64 {
    let dim = a.dim() as usize;
    let d = *b - *a;
    // Squared distance is piecewise quadratic in t with breakpoints where a
    // coordinate crosses a slab face; minimise each piece in closed form.
    let mut breaks = vec![0.0, 1.0];
    for i in 0..dim {
        let di = d.components()[i];
        if di != 0.0 {
            for face in [min.components()[i], max.components()[i]] {
                let t = (face - a.components()[i]) / di;
                if t > 0.0 && t < 1.0 {
                    breaks.push(t);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let sq = |t: f64| {
        let p = *a + d * t;
        let mut s = 0.0;
        for i in 0..dim {
            let v = p.components()[i];
            let e = (min.components()[i] - v).max(v - max.components()[i]).max(0.0);
            s += e * e;
        }
        s
    };
    let mut best = f64::INFINITY;
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        let p = *a + d * mid;
        // On this piece each axis is either inside its slab or beyond one face.
        let (mut qa, mut qb) = (0.0, 0.0);
        for i in 0..dim {
            let v = p.components()[i];
            let face = if v < min.components()[i] {
                min.components()[i]
            } else if v > max.components()[i] {
                max.components()[i]
            } else {
                continue;
            };
            // (a_i + t d_i - face)^2
            let di = d.components()[i];
            let off = a.components()[i] - face;
            qa += di * di;
            qb += di * off;
        }
        let mut cands = vec![t0, t1];
        if qa > 0.0 {
            let t = (-qb / qa).clamp(t0, t1);
            cands.push(t);
        }
        for t in cands {
            best = best.min(sq(t));
        }
    }
    best.sqrt()
}

/// Distance from the segment to the obstacle surface (zero or negative when
/// the segment enters it).
pub fn segment_clearance(a: &Vector, b: &Vector, obstacle: &Obstacle) -> f64 {
    match obstacle {
        Obstacle::Sphere { center, radius_m } => {
            closest_point_on_segment(a, b, center).distance(center) - radius_m
        }
        Obstacle::Box { min, max } => segment_box_distance(a, b, min, max),
    }
}

/// Static planning problem: obstacles plus point hazards (agent centers),
/// all to be avoided by `clearance`.
pub struct PlanningScene<'a> {
    pub obstacles: &'a [Obstacle],
    pub disks: Vec<Vector>,
    pub clearance: f64,
}

impl<'a> PlanningScene<'a> {
    pub fn new(obstacles: &'a [Obstacle], disks: Vec<Vector>, clearance: f64) -> Self {
        Self {
            obstacles,
            disks,
            clearance,
        }
    }

    pub fn point_clearance(&self, p: &Vector) -> f64 {
        let o = self
            .obstacles
            .iter()
            .map(|o| o.signed_distance(p))
            .fold(f64::INFINITY, f64::min);
        self.disks
            .iter()
            .map(|c| c.distance(p))
            .fold(o, f64::min)
    }

    pub fn point_is_free(&self, p: &Vector) -> bool {
        self.point_clearance(p) >= self.clearance
    }

    pub fn segment_is_free(&self, a: &Vector, b: &Vector) -> bool {
        let limit = self.clearance - EDGE_TOLERANCE;
        self.obstacles
            .iter()
            .all(|o| segment_clearance(a, b, o) >= limit)
            && self
                .disks
                .iter()
                .all(|c| closest_point_on_segment(a, b, c).distance(c) >= limit)
    }

    fn ring(&self, center: &Vector, radius: f64, out: &mut Vec<Vector>) {
        if center.dim() == 2 {
            let n = CIRCLE_VERTICES as f64;
            let r = radius / (PI / n).cos() * (1.0 + INFLATE_SLACK) + INFLATE_SLACK;
            for k in 0..CIRCLE_VERTICES {
                let th = 2.0 * PI * k as f64 / n;
                out.push(*center + Vector::new2(r * th.cos(), r * th.sin()));
            }
        } else {
            let n = SHELL_VERTICES as f64;
            let r = radius * 1.15 + INFLATE_SLACK;
            let golden = PI * (3.0 - 5f64.sqrt());
            for k in 0..SHELL_VERTICES {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / n;
                let rho = (1.0 - z * z).sqrt();
                let th = golden * k as f64;
                out.push(*center + Vector::new3(r * rho * th.cos(), r * rho * th.sin(), r * z));
            }
        }
    }

    fn vertices(&self) -> Vec<Vector> {
        let c = self.clearance;
        let mut out = Vec::new();
        for o in self.obstacles {
            match o {
                Obstacle::Sphere { center, radius_m } => self.ring(center, radius_m + c, &mut out),
                Obstacle::Box { min, max } => {
                    let pad = c * (1.0 + INFLATE_SLACK) + INFLATE_SLACK;
                    let dim = min.dim() as usize;
                    for mask in 0..(1usize << dim) {
                        let mut v = *min;
                        for i in 0..dim {
                            let val = if mask & (1 << i) != 0 {
                                max.components()[i] + pad
                            } else {
                                min.components()[i] - pad
                            };
                            v = v.with_component(i, val);
                        }
                        out.push(v);
                    }
                }
            }
        }
        for d in &self.disks {
            self.ring(d, c, &mut out);
        }
        out.retain(|v| self.point_is_free(v));
        out
    }

    /// Shortest polyline from `from` to `to` keeping the clearance.
    pub fn plan(&self, from: Vector, to: Vector) -> Result<Vec<Vector>, SimError> {
        if !self.point_is_free(&to) {
            return Err(SimError::Infeasible("destination inside an inflated region".into()));
        }
        if !self.point_is_free(&from) {
            return Err(SimError::Infeasible("start inside an inflated region".into()));
        }
        if self.segment_is_free(&from, &to) {
            return Ok(vec![from, to]);
        }
        let mut nodes = vec![from, to];
        nodes.extend(self.vertices());
        let n = nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[0] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for i in 0..n {
                if !done[i] && dist[i] < best {
                    best = dist[i];
                    u = i;
                }
            }
            if u == usize::MAX {
                break;
            }
            if u == 1 {
                break;
            }
            done[u] = true;
            for v in 0..n {
                if done[v] {
                    continue;
                }
                let w = nodes[u].distance(&nodes[v]);
                if dist[u] + w < dist[v] && self.segment_is_free(&nodes[u], &nodes[v]) {
                    dist[v] = dist[u] + w;
                    prev[v] = u;
                }
            }
        }
        if !dist[1].is_finite() {
            return Err(SimError::Infeasible("no collision-free route".into()));
        }
        let mut path = vec![nodes[1]];
        let mut cur = 1;
        while cur != 0 {
            cur = prev[cur];
            path.push(nodes[cur]);
        }
        path.reverse();
        Ok(path)
    }
}

/// Plans a path avoiding the world's obstacles and every swarm agent's
/// safety disk of radius `clearance`.
pub fn plan_path(
    from: Vector,
    to: Vector,
    world: &WorldState,
    clearance: f64,
) -> Result<Vec<Vector>, SimError> {
    let disks = world.swarm().map(|a| a.position).collect();
    PlanningScene::new(&world.obstacles, disks, clearance).plan(from, to)
}

/// Minimum clearance along a polyline, sampled every `step` meters.
pub fn sampled_clearance(path: &[Vector], scene: &PlanningScene, step: f64) -> f64 {
    let mut best = f64::INFINITY;
    for w in path.windows(2) {
        let len = w[0].distance(&w[1]);
        let n = ((len / step).ceil() as usize).max(1);
        for k in 0..=n {
            let p = w[0] + (w[1] - w[0]) * (k as f64 / n as f64);
            best = best.min(scene.point_clearance(&p));
        }
    }
    best
}

pub fn path_length(path: &[Vector]) -> f64 {
    path.windows(2).map(|w| w[0].distance(&w[1])).sum()
}
