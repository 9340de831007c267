//! Graph generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use hintwalk::hierarchy::HierarchyNode;
use hintwalk::planner::ExplorationPlan;
use hintwalk::{ScreenState, StateId, StgGraph, TriggerAction};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A screen whose signature overlaps no other screen's.
pub fn unique_screen(i: usize) -> HierarchyNode {
    HierarchyNode::new("LinearLayout")
        .with_id(format!("root{i}"))
        .with_child(HierarchyNode::new("Button").with_id(format!("b{i}")))
}

pub fn state(i: usize) -> ScreenState {
    ScreenState::new(format!("S{i}"), format!("A{}", i % 3), unique_screen(i))
}

/// Random digraph on `n` distinguishable states. With `connected` a ring
/// through a random permutation makes it strongly connected.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64, max_weight: u32, connected: bool) -> StgGraph {
    let states: Vec<ScreenState> = (0..n).map(state).collect();
    let mut actions = Vec::new();
    let edge = |a: usize, b: usize, rng: &mut ChaCha8Rng, k: usize| {
        let w = rng.gen_range(1..=max_weight);
        TriggerAction::click(format!("S{a}"), format!("S{b}"), &format!("e{k}")).with_weight(w)
    };
    let mut k = 0;
    if connected {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for i in 0..n {
            actions.push(edge(perm[i], perm[(i + 1) % n], rng, k));
            k += 1;
        }
    }
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(density) {
                actions.push(edge(a, b, rng, k));
                k += 1;
            }
        }
    }
    StgGraph::build(states, actions, "S0").expect("generated graphs are valid")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Single-source shortest distances by Dijkstra over edge weights.
pub fn dijkstra(g: &StgGraph, source: usize) -> Vec<Option<u64>> {
    let mut dist: Vec<Option<u64>> = vec![None; g.len()];
    let mut heap = BinaryHeap::from([Reverse((0u64, source))]);
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist[v].is_some() {
            continue;
        }
        dist[v] = Some(d);
        for a in g.outgoing(v) {
            let w = g.index_of(a.target.as_str()).unwrap();
            if dist[w].is_none() {
                heap.push(Reverse((d + u64::from(a.weight), w)));
            }
        }
    }
    dist
}

/// Hop distances by breadth-first search, ignoring weights.
pub fn bfs(g: &StgGraph, source: usize) -> Vec<Option<u64>> {
    let mut dist = vec![None; g.len()];
    dist[source] = Some(0);
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for w in g.successors(v) {
            if dist[w].is_none() {
                dist[w] = Some(dist[v].unwrap() + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Cheapest simple path by exhaustive enumeration.
pub fn simple_path_min(g: &StgGraph, s: usize, t: usize) -> Option<u64> {
    fn go(g: &StgGraph, v: usize, t: usize, on: &mut Vec<bool>, cost: u64, best: &mut Option<u64>) {
        if v == t {
            *best = Some(best.map_or(cost, |b| b.min(cost)));
            return;
        }
        for a in g.outgoing(v) {
            let w = g.index_of(a.target.as_str()).unwrap();
            if !on[w] {
                on[w] = true;
                go(g, w, t, on, cost + u64::from(a.weight), best);
                on[w] = false;
            }
        }
    }
    let mut on = vec![false; g.len()];
    on[s] = true;
    let mut best = None;
    go(g, s, t, &mut on, 0, &mut best);
    best
}

/// Minimum over every visiting order of `targets` from `start`, legs
/// stitched with shortest distances; `None` if no order is finite.
pub fn brute_force_cover(g: &StgGraph, start: usize, targets: &[usize]) -> Option<u64> {
    let dist: Vec<Vec<Option<u64>>> = (0..g.len()).map(|s| dijkstra(g, s)).collect();
    fn go(dist: &[Vec<Option<u64>>], at: usize, left: &mut Vec<usize>, cost: u64, best: &mut Option<u64>) {
        if left.is_empty() {
            *best = Some(best.map_or(cost, |b| b.min(cost)));
            return;
        }
        for k in 0..left.len() {
            let next = left.swap_remove(k);
            if let Some(d) = dist[at][next] {
                go(dist, next, left, cost + d, best);
            }
            left.push(next);
            let last = left.len() - 1;
            left.swap(k, last);
        }
    }
    let mut left = targets.to_vec();
    let mut best = None;
    go(&dist, start, &mut left, 0, &mut best);
    best
}

/// Indices reachable from the entry, minus `start` and `visited`.
pub fn open_targets(g: &StgGraph, start: usize, visited: &BTreeSet<StateId>) -> Vec<usize> {
    let reach = g.reachable_mask(g.entry_index());
    (0..g.len()).filter(|&i| reach[i] && i != start && !visited.contains(&g.state_at(i).id)).collect()
}

/// Checks the plan is a connected walk from its start whose cost is the
/// sum of its edge weights and which visits every target.
pub fn assert_valid_walk(g: &StgGraph, plan: &ExplorationPlan) {
    assert_eq!(plan.walk.len(), plan.edges.len() + 1);
    assert_eq!(plan.walk[0], plan.start);
    for (k, e) in plan.edges.iter().enumerate() {
        assert_eq!(e.source, plan.walk[k], "edge {k} does not leave the previous state");
        assert_eq!(e.target, plan.walk[k + 1]);
        let src = g.index_of(e.source.as_str()).unwrap();
        assert!(g.find_action(src, &e.component.id, e.action_kind).is_some(), "edge {k} not in graph");
    }
    let cost: u64 = plan.edges.iter().map(|e| u64::from(e.weight)).sum();
    assert_eq!(cost, plan.total_steps);
    let seen: BTreeSet<&StateId> = plan.walk.iter().collect();
    for t in &plan.targets {
        assert!(seen.contains(t), "target {t} not visited");
    }
}
