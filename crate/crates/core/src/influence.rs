//! Constraint influence graph and Katz key-node ranking.
//!
//! An edge `i -> j` carries how much agent `i`'s presence changes agent `j`'s
//! control command (a one-step counterfactual). Katz centrality is taken on
//! the reversed graph so the top-ranked node is the strongest influencer.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::sim::{AgentId, Commands, Controller, MissionSpec, WorldState};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 1000;
/// Scores closer than this are treated as ties when ranking.
pub const SCORE_RESOLUTION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceGraph {
    pub nodes: Vec<AgentId>,
    /// `(from, to) -> weight`, all weights strictly positive.
    pub edges: BTreeMap<(AgentId, AgentId), f64>,
    pub d_influence: f64,
}

impl InfluenceGraph {
    pub fn new(nodes: Vec<AgentId>, d_influence: f64) -> Self {
        Self {
            nodes,
            edges: BTreeMap::new(),
            d_influence,
        }
    }

    /// Inserts `from -> to` when `weight > 0`. Self-loops are ignored.
    pub fn add_edge(&mut self, from: AgentId, to: AgentId, weight: f64) {
        if from != to && weight > 0.0 {
            self.edges.insert((from, to), weight);
        }
    }

    pub fn weight(&self, from: AgentId, to: AgentId) -> f64 {
        self.edges.get(&(from, to)).copied().unwrap_or(0.0)
    }

    pub fn edge_list(&self) -> Vec<(AgentId, AgentId, f64)> {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w)).collect()
    }

    /// Dense matrix `w[i][j] = weight(nodes[i] -> nodes[j])`.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let idx: BTreeMap<AgentId, usize> =
            self.nodes.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        let n = self.nodes.len();
        let mut w = vec![vec![0.0; n]; n];
        for (&(i, j), &v) in &self.edges {
            if let (Some(&a), Some(&b)) = (idx.get(&i), idx.get(&j)) {
                w[a][b] = v;
            }
        }
        w
    }
}

fn deviation(base: &Commands, cf: &Commands, j: AgentId, v_max: f64) -> f64 {
    match (base.get(&j), cf.get(&j)) {
        (Some(a), Some(b)) => (*a - *b).norm() / v_max,
        _ => 0.0,
    }
}

/// Normalised change of `j`'s command when `i` is removed from the world.
/// Zero when the pair is farther apart than `d_influence`.
pub fn cal_deviation(
    i: AgentId,
    j: AgentId,
    world: &WorldState,
    controller: &dyn Controller,
    spec: &MissionSpec,
    d_influence: f64,
) -> f64 {
    let (Some(a), Some(b)) = (world.agent(i), world.agent(j)) else {
        return 0.0;
    };
    if i == j || a.position.distance(&b.position) > d_influence {
        return 0.0;
    }
    let base = controller.commands(world, spec);
    let cf = controller.commands(&world.without_agent(i), spec);
    deviation(&base, &cf, j, spec.v_max)
}

/// Influence graph over the given swarm members. Agents outside `nodes`
/// (including any attacker) stay in the world but are not ranked.
pub fn build_influence_subgraph(
    world: &WorldState,
    controller: &dyn Controller,
    spec: &MissionSpec,
    d_influence: f64,
    nodes: &[AgentId],
) -> InfluenceGraph {
    let nodes: Vec<AgentId> = nodes.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut graph = InfluenceGraph::new(nodes.clone(), d_influence);
    let base = controller.commands(world, spec);
    for &i in &nodes {
        let Some(pi) = world.agent(i).map(|a| a.position) else { continue };
        let near: Vec<AgentId> = nodes
            .iter()
            .copied()
            .filter(|&j| {
                j != i
                    && world
                        .agent(j)
                        .is_some_and(|b| b.position.distance(&pi) <= d_influence)
            })
            .collect();
        if near.is_empty() {
            continue;
        }
        let cf = controller.commands(&world.without_agent(i), spec);
        for j in near {
            graph.add_edge(i, j, deviation(&base, &cf, j, spec.v_max));
        }
    }
    graph
}

/// Influence graph over every swarm member.
pub fn build_influence_graph(
    world: &WorldState,
    controller: &dyn Controller,
    spec: &MissionSpec,
    d_influence: f64,
) -> InfluenceGraph {
    build_influence_subgraph(world, controller, spec, d_influence, &world.swarm_ids())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KatzError {
    #[error("katz iteration did not converge after {iterations} iterations")]
    NonConvergent {
        iterations: usize,
        last: BTreeMap<AgentId, f64>,
    },
}

fn mat_vec(w: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    w.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn has_cycle(w: &[Vec<f64>]) -> bool {
    // Kahn's algorithm: a graph is acyclic iff every node can be peeled off.
    let n = w.len();
    let mut indeg = vec![0usize; n];
    for row in w {
        for (j, &v) in row.iter().enumerate() {
            if v > 0.0 {
                indeg[j] += 1;
            }
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(u) = stack.pop() {
        seen += 1;
        for (v, &x) in w[u].iter().enumerate() {
            if x > 0.0 {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    stack.push(v);
                }
            }
        }
    }
    seen < n
}

/// Upper bound on the spectral radius of a non-negative matrix.
///
/// Acyclic graphs are nilpotent; for them the max row sum is returned so the
/// attenuation factor stays finite. Otherwise a Collatz–Wielandt bound from
/// power iteration on the shifted matrix `W + sI` is used. The bound holds for
/// any shift, so `s` follows the current bound, which keeps periodic graphs
/// converging without slowing down graphs whose radius is far below the row
/// sums. Everything is homogeneous in the weights.
pub fn spectral_radius_bound(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    let row_max = w
        .iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(0.0, f64::max);
    if row_max == 0.0 || !has_cycle(w) {
        return row_max;
    }
    let mut best = row_max;
    let mut x = vec![1.0; n];
    for _ in 0..DEFAULT_MAX_ITER {
        let s = best;
        let wx = mat_vec(w, &x);
        let y: Vec<f64> = wx.iter().zip(&x).map(|(a, b)| a + s * b).collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in y.iter().zip(&x) {
            let r = a / b;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        best = best.min(hi - s).max(f64::MIN_POSITIVE);
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let norm = y.iter().copied().fold(0.0, f64::max);
        // Keep every entry strictly positive so the ratios stay defined.
        x = y.iter().map(|v| (v / norm).max(1e-300)).collect();
    }
    best
}

/// Katz centrality on the reversed graph: solves `x = alpha W x + 1` with
/// `alpha = alpha_factor / lambda_max(W)`. The stopping rule compares the
/// largest change with `tol * max(1, |x|)`, since chained strong components of
/// equal radius can push scores far beyond what an absolute `tol` resolves.
pub fn katz_centrality(
    graph: &InfluenceGraph,
    alpha_factor: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BTreeMap<AgentId, f64>, KatzError> {
    let n = graph.nodes.len();
    let w = graph.matrix();
    let lambda = spectral_radius_bound(&w);
    let alpha = if lambda > 0.0 { alpha_factor / lambda } else { 0.0 };
    let label = |x: &[f64]| -> BTreeMap<AgentId, f64> {
        graph.nodes.iter().copied().zip(x.iter().copied()).collect()
    };
    let mut x = vec![1.0; n];
    for _ in 0..max_iter {
        let wx = mat_vec(&w, &x);
        let next: Vec<f64> = wx.iter().map(|v| alpha * v + 1.0).collect();
        let delta = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = next.iter().copied().fold(1.0, f64::max);
        x = next;
        if delta < tol * scale {
            return Ok(label(&x));
        }
    }
    Err(KatzError::NonConvergent {
        iterations: max_iter,
        last: label(&x),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyNodeSequence {
    pub order: Vec<AgentId>,
    pub scores: BTreeMap<AgentId, f64>,
}

impl KeyNodeSequence {
    pub fn key_node(&self) -> Option<AgentId> {
        self.order.first().copied()
    }
}

/// Orders ids by descending score, ties by ascending id.
pub fn rank_scores(scores: &BTreeMap<AgentId, f64>) -> Vec<AgentId> {
    let mut ids: Vec<(i64, AgentId)> = scores
        .iter()
        .map(|(&id, &s)| ((s / SCORE_RESOLUTION).round() as i64, id))
        .collect();
    ids.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    ids.into_iter().map(|(_, id)| id).collect()
}

pub fn key_node_sequence(
    graph: &InfluenceGraph,
    alpha_factor: f64,
) -> Result<KeyNodeSequence, KatzError> {
    let scores = katz_centrality(graph, alpha_factor, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(KeyNodeSequence {
        order: rank_scores(&scores),
        scores,
    })
}
