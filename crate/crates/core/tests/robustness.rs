use std::collections::{BTreeMap, VecDeque};

use litelfuzz_core::geometry::{Obstacle, Vector};
use litelfuzz_core::robustness::{
    constraint_violations, margin_kinematics, margin_safe_distance, swarm_robustness, Constraint,
    ConstraintParams,
};
use litelfuzz_core::sim::{AgentState, Role, WorldState};
use proptest::prelude::*;

const D_COOLEYE: f64 = 0.15;

fn params(rob4: bool) -> ConstraintParams {
    ConstraintParams {
        d_s: 0.05,
        d_cooleye: D_COOLEYE,
        v_max: 0.5,
        a_max: 1.0,
        d_m: 0.1,
        d_big_m: 0.6,
        dt: 0.1,
        progress_window: 20,
        rob4_enabled: rob4,
    }
}

#[derive(Debug, Clone)]
struct Sample {
    world: WorldState,
    histories: BTreeMap<u32, VecDeque<f64>>,
    rob4: bool,
}

/// Picks either a value exactly on the constraint boundary or a random one,
/// so both sides and the boundary itself are exercised.
fn near(boundary: f64, spread: f64) -> impl Strategy<Value = f64> {
    prop_oneof![
        1 => Just(boundary),
        4 => (boundary - spread)..(boundary + spread),
    ]
}

fn agent_state() -> impl Strategy<Value = (Vector, f64, f64, f64, f64)> {
    (
        (-0.6..0.6f64, -0.6..0.6f64).prop_map(|(x, y)| Vector::new2(x, y)),
        0.0..std::f64::consts::TAU,
        near(0.5, 0.2).prop_map(|v| v.max(0.0)),
        0.0..std::f64::consts::TAU,
        near(1.0, 0.5).prop_map(|a| a.max(0.0)),
    )
}

fn history() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        1 => (0.5..3.0f64, 2usize..=21).prop_map(|(d, n)| vec![d; n]),
        1 => (0.5..3.0f64, 2usize..=21, 0.0..0.05f64)
            .prop_map(|(d, n, s)| (0..n).map(|k| d + s * k as f64).collect()),
        2 => prop::collection::vec(0.5..3.0f64, 2..=21),
    ]
}

fn sample() -> impl Strategy<Value = Sample> {
    (
        prop::collection::vec((agent_state(), history()), 1..6),
        prop::collection::vec(
            ((-0.8..0.8f64, -0.8..0.8f64), 0.02..0.3f64),
            0..4,
        ),
        any::<bool>(),
        prop::option::of((0usize..6, 0usize..6, near(0.05, 0.05))),
    )
        .prop_map(|(agents, obstacles, rob4, pinned)| {
            let mut states: Vec<AgentState> = agents
                .iter()
                .enumerate()
                .map(|(i, ((p, vd, v, ad, a), _))| {
                    let mut s = AgentState::new(i as u32, Role::Follower, *p, D_COOLEYE);
                    s.velocity = Vector::new2(vd.cos(), vd.sin()) * *v;
                    s.acceleration = Vector::new2(ad.cos(), ad.sin()) * *a;
                    s
                })
                .collect();
            // Occasionally put two agents exactly d_s apart.
            if let Some((i, j, d)) = pinned {
                let n = states.len();
                let (i, j) = (i % n, j % n);
                if i != j {
                    let p = states[i].position + Vector::new2(d, 0.0);
                    states[j].position = p;
                }
            }
            let histories = agents
                .iter()
                .enumerate()
                .map(|(i, (_, h))| (i as u32, h.iter().copied().collect()))
                .collect();
            Sample {
                world: WorldState {
                    t: 1,
                    agents: states,
                    obstacles: obstacles
                        .into_iter()
                        .map(|((x, y), r)| Obstacle::sphere(Vector::new2(x, y), r))
                        .collect(),
                    leader_waypoints: vec![],
                    waypoint_index: 0,
                    search: None,
                },
                histories,
                rob4,
            }
        })
}

/// Boolean predicates of the four constraint schemas, evaluated directly on
/// the state. Returns every violated (agent, constraint) pair.
fn violated_predicates(s: &Sample, p: &ConstraintParams) -> Vec<(u32, Constraint)> {
    let mut out = Vec::new();
    for a in &s.world.agents {
        let too_close_obstacle = s
            .world
            .obstacles
            .iter()
            .any(|o| o.signed_distance(&a.position) <= p.d_s);
        let too_close_agent = s
            .world
            .agents
            .iter()
            .any(|b| b.id != a.id && b.position.distance(&a.position) <= p.d_s);
        if too_close_obstacle || too_close_agent {
            out.push((a.id, Constraint::SafeDistance));
        }
        if a.velocity.norm() >= p.v_max {
            out.push((a.id, Constraint::Speed));
        }
        if a.acceleration.norm() >= p.a_max {
            out.push((a.id, Constraint::Acceleration));
        }
        if p.rob4_enabled {
            let band_broken = s.world.agents.iter().any(|b| {
                b.id != a.id && {
                    let d = b.position.distance(&a.position);
                    d <= p.d_m || d >= p.d_big_m
                }
            });
            if band_broken {
                out.push((a.id, Constraint::Formation));
            }
        }
        let h: Vec<f64> = s.histories[&a.id].iter().copied().collect();
        let ever_closer = h.windows(2).any(|w| w[1] < w[0]);
        if !ever_closer {
            out.push((a.id, Constraint::Progress));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, ..ProptestConfig::default() })]

    #[test]
    fn sign_of_each_margin_matches_its_predicate(s in sample()) {
        let p = params(s.rob4);
        let rec = swarm_robustness(&s.world, &s.histories, &p);
        let mut got = constraint_violations(&rec);
        let mut want = violated_predicates(&s, &p);
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn normalized_margins_stay_in_unit_range(s in sample()) {
        let rec = swarm_robustness(&s.world, &s.histories, &params(s.rob4));
        for a in &rec.per_agent {
            for r in a.norm {
                prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&r));
            }
            let applicable = if s.rob4 { 5.0 } else { 4.0 };
            prop_assert!(a.individual.abs() <= applicable + 1e-9);
        }
        let sum: f64 = rec.per_agent.iter().map(|a| a.individual).sum();
        prop_assert!((rec.swarm - sum).abs() < 1e-12);
    }

    #[test]
    fn margins_are_monotone(d1 in 0.0..D_COOLEYE, d2 in 0.0..D_COOLEYE, v1 in 0.0..0.5f64, v2 in 0.0..0.5f64) {
        let p = params(true);
        prop_assume!(d1 != d2 && v1 != v2);
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(margin_safe_distance(lo, &p).normalized < margin_safe_distance(hi, &p).normalized);
        let (slow, fast) = if v1 < v2 { (v1, v2) } else { (v2, v1) };
        prop_assert!(margin_kinematics(fast, 0.0, &p).0.normalized < margin_kinematics(slow, 0.0, &p).0.normalized);
    }

    #[test]
    fn union_of_distant_subswarms_adds_up(a in sample(), b in sample()) {
        let p = params(false);
        let shift = Vector::new2(100.0, 0.0);
        let ra = swarm_robustness(&a.world, &a.histories, &p);
        let rb = swarm_robustness(&b.world, &b.histories, &p);
        let mut union = a.world.clone();
        let mut histories = a.histories.clone();
        let offset = 1000;
        for ag in &b.world.agents {
            let mut moved = ag.clone();
            moved.id += offset;
            moved.position = moved.position + shift;
            union.agents.push(moved);
            histories.insert(ag.id + offset, b.histories[&ag.id].clone());
        }
        union.obstacles.extend(b.world.obstacles.iter().map(|o| match o {
            Obstacle::Sphere { center, radius_m } => Obstacle::sphere(*center + shift, *radius_m),
            Obstacle::Box { min, max } => Obstacle::aabb(*min + shift, *max + shift),
        }));
        let ru = swarm_robustness(&union, &histories, &p);
        prop_assert!((ru.swarm - (ra.swarm + rb.swarm)).abs() < 1e-9);
    }
}

#[test]
fn zero_raw_margins_normalize_to_zero() {
    let p = params(true);
    assert_eq!(margin_safe_distance(p.d_s, &p).normalized, 0.0);
    let (v, a) = margin_kinematics(p.v_max, p.a_max, &p);
    assert_eq!((v.raw, v.normalized), (0.0, 0.0));
    assert_eq!((a.raw, a.normalized), (0.0, 0.0));
    let f = litelfuzz_core::robustness::margin_formation(&[p.d_m, 0.3], &p);
    assert_eq!((f.raw, f.normalized), (0.0, 0.0));
    let g = litelfuzz_core::robustness::margin_progress(&[1.0, 1.0, 1.0], &p);
    assert_eq!((g.raw, g.normalized), (0.0, 0.0));
}

#[test]
fn swarm_sum_examples() {
    let p = params(true);
    // Four agents on a 0.35 m square: every margin but formation is full.
    let corners = [(0.0, 0.0), (0.35, 0.0), (0.0, 0.35), (0.35, 0.35)];
    let agents: Vec<AgentState> = corners
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| AgentState::new(i as u32, Role::Follower, Vector::new2(x, y), D_COOLEYE))
        .collect();
    let histories: BTreeMap<u32, VecDeque<f64>> =
        (0..4).map(|i| (i, VecDeque::from(vec![1.05, 1.0]))).collect();
    let w = WorldState {
        t: 1,
        agents,
        obstacles: vec![],
        leader_waypoints: vec![],
        waypoint_index: 0,
        search: None,
    };
    let rec = swarm_robustness(&w, &histories, &p);
    let ind: Vec<f64> = rec.per_agent.iter().map(|a| a.individual).collect();
    assert!((rec.swarm - ind.iter().sum::<f64>()).abs() < 1e-12);
    assert!(constraint_violations(&rec).is_empty());

    let mut single = w.clone();
    single.agents.truncate(1);
    let one = swarm_robustness(&single, &histories, &p);
    assert_eq!(one.swarm, one.per_agent[0].individual);
}
