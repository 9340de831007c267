//! Coverage-walk planning over a state-transition graph.
//!
//! All-pairs shortest distances come from Floyd-Warshall, which also
//! records a midpoint for every improved pair so that any shortest path can
//! be expanded back into concrete edges. On top of the distance matrix a
//! bitmask dynamic program over the set of target states finds the cheapest
//! order in which to first-visit every target, starting from the current
//! state and ending anywhere:
//!
//! ```text
//! dp[V][j] = min over i in V\{j} of dp[V\{j}][i] + d(i, j)
//! ```
//!
//! `V` is the visit status (a bitmask over targets) and `dp[{start}][start]`
//! is zero. The walk is recovered by following the `visit_status`
//! backpointers from the cheapest end node and expanding each leg through
//! the midpoint table.
//!
//! The table has `n * 2^(n-1)` cells, so exact planning is capped at
//! [`DEFAULT_EXACT_LIMIT`] targets. Past that, [`plan_path_greedy`] walks to
//! the nearest unvisited target until none remain.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stg::{ActionKind, ComponentRef, GraphError, StateId, StgGraph, TriggerAction};

pub const DEFAULT_EXACT_LIMIT: usize = 20;
/// Hard ceiling on the exact table: 2^27 cells per target row is ~3 GiB.
pub const MAX_EXACT_LIMIT: usize = 26;

pub type Cost = u64;
pub const UNREACHABLE: Cost = Cost::MAX;

const NO_PREDECESSOR: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Largest target count (start included) planned exactly.
    pub exact_limit: usize,
    /// Cost of synthetic restart edges; `None` leaves the graph as is.
    pub relaunch_cost: Option<u32>,
    /// Fall back to the greedy planner instead of failing.
    pub heuristic_fallback: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { exact_limit: DEFAULT_EXACT_LIMIT, relaunch_cost: None, heuristic_fallback: true }
    }
}

impl PlannerConfig {
    pub fn exact_only() -> Self {
        Self { heuristic_fallback: false, ..Self::default() }
    }

    pub fn with_relaunch(mut self, cost: u32) -> Self {
        self.relaunch_cost = Some(cost);
        self
    }

    pub fn with_exact_limit(mut self, limit: usize) -> Self {
        self.exact_limit = limit;
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("unknown state `{0}`")]
    UnknownState(StateId),
    #[error("states not reachable from `{from}`: {states:?}")]
    UnreachableStates { from: StateId, states: Vec<StateId> },
    #[error("no single walk from `{from}` visits every target; enable relaunch edges")]
    NoCoveringWalk { from: StateId },
    #[error("{targets} targets exceed the exact planning limit of {limit}")]
    ExactLimitExceeded { targets: usize, limit: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Distances, shortest-path midpoints and the visit-status DP.
#[derive(Debug, Clone)]
pub struct PlanTables {
    n: usize,
    d: Vec<Cost>,
    node_sequence: Vec<Option<usize>>,
    /// Cheapest direct edge for each pair, as an index into the action list.
    direct: Vec<Option<usize>>,
    /// Graph indices of the DP targets; `targets[0]` is the start.
    targets: Vec<usize>,
    /// `dp[mask * targets.len() + j]`, mask over `targets[1..]`.
    dp: Vec<Cost>,
    visit_status: Vec<u8>,
}

impl PlanTables {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Shortest distance, `None` when `j` is unreachable from `i`.
    pub fn distance(&self, i: usize, j: usize) -> Option<Cost> {
        let v = self.d[i * self.n + j];
        (v != UNREACHABLE).then_some(v)
    }

    pub fn raw_distance(&self, i: usize, j: usize) -> Cost {
        self.d[i * self.n + j]
    }

    /// Midpoint recorded for `(i, j)`; `None` means the shortest path is
    /// the direct edge (or `i == j`).
    pub fn midpoint(&self, i: usize, j: usize) -> Option<usize> {
        self.node_sequence[i * self.n + j]
    }

    /// Action indices along a shortest path from `i` to `j`.
    pub fn path(&self, i: usize, j: usize) -> Option<Vec<usize>> {
        self.distance(i, j)?;
        let mut out = Vec::new();
        self.expand(i, j, &mut out);
        Some(out)
    }

    fn expand(&self, i: usize, j: usize, out: &mut Vec<usize>) {
        if i == j {
            return;
        }
        match self.midpoint(i, j) {
            Some(k) => {
                self.expand(i, k, out);
                self.expand(k, j, out);
            }
            None => out.push(self.direct[i * self.n + j].expect("finite distance without midpoint has an edge")),
        }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// DP cell for the visit status `mask` (over `targets[1..]`) ending at
    /// target position `j`.
    pub fn dp(&self, mask: usize, j: usize) -> Option<Cost> {
        let v = *self.dp.get(mask * self.targets.len() + j)?;
        (v != UNREACHABLE).then_some(v)
    }

    /// Predecessor target position stored for `(mask, j)`.
    pub fn visit_status(&self, mask: usize, j: usize) -> Option<usize> {
        let v = *self.visit_status.get(mask * self.targets.len() + j)?;
        (v != NO_PREDECESSOR).then_some(v as usize)
    }

    pub fn full_mask(&self) -> usize {
        (1usize << self.targets.len().saturating_sub(1)) - 1
    }
}

/// Floyd-Warshall over the graph's edges, recording midpoints.
pub fn all_pairs_shortest(g: &StgGraph) -> PlanTables {
    let n = g.len();
    let mut d = vec![UNREACHABLE; n * n];
    let mut direct = vec![None; n * n];
    for i in 0..n {
        d[i * n + i] = 0;
    }
    for (a, action) in g.actions().iter().enumerate() {
        let i = g.index_of(action.source.as_str()).expect("built graph");
        let j = g.index_of(action.target.as_str()).expect("built graph");
        if i == j {
            continue;
        }
        let w = Cost::from(action.weight);
        if w < d[i * n + j] {
            d[i * n + j] = w;
            direct[i * n + j] = Some(a);
        }
    }
    let mut node_sequence = vec![None; n * n];
    for k in 0..n {
        for i in 0..n {
            let ik = d[i * n + k];
            if ik == UNREACHABLE {
                continue;
            }
            for j in 0..n {
                let kj = d[k * n + j];
                if kj == UNREACHABLE {
                    continue;
                }
                if d[i * n + j] > ik + kj {
                    d[i * n + j] = ik + kj;
                    node_sequence[i * n + j] = Some(k);
                }
            }
        }
    }
    PlanTables { n, d, node_sequence, direct, targets: Vec::new(), dp: Vec::new(), visit_status: Vec::new() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplorationPlan {
    pub start: StateId,
    /// States in visiting order, beginning with `start`.
    pub walk: Vec<StateId>,
    /// `edges[k]` leads from `walk[k]` to `walk[k + 1]`.
    pub edges: Vec<TriggerAction>,
    pub total_steps: Cost,
    pub covered: BTreeSet<StateId>,
    /// Coverage targets this plan was asked to reach (start excluded).
    pub targets: BTreeSet<StateId>,
    pub uncoverable: BTreeSet<StateId>,
    pub strategy: Strategy,
}

impl ExplorationPlan {
    pub fn is_heuristic(&self) -> bool {
        self.strategy == Strategy::Greedy
    }

    pub fn to_file(&self) -> PlanFile {
        PlanFile {
            start: self.start.clone(),
            steps: self
                .edges
                .iter()
                .map(|e| PlanStep {
                    state: e.source.clone(),
                    component: e.component.clone(),
                    action_kind: e.action_kind,
                    target: e.target.clone(),
                })
                .collect(),
            total_steps: self.total_steps,
            uncoverable: self.uncoverable.iter().cloned().collect(),
            strategy: self.strategy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub state: StateId,
    pub component: ComponentRef,
    pub action_kind: ActionKind,
    pub target: StateId,
}

/// On-disk form of a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanFile {
    pub start: StateId,
    pub steps: Vec<PlanStep>,
    pub total_steps: Cost,
    pub uncoverable: Vec<StateId>,
    pub strategy: Strategy,
}

/// Graph the planner actually works on under `cfg`.
pub fn planning_graph(g: &StgGraph, cfg: &PlannerConfig) -> Result<StgGraph, PlanError> {
    Ok(match cfg.relaunch_cost {
        Some(cost) => g.with_relaunch_edges(cost)?,
        None => g.clone(),
    })
}

struct Problem {
    start: usize,
    /// Unvisited states reachable from the entry, excluding `start`.
    targets: Vec<usize>,
    /// Never reachable from the entry.
    outside: BTreeSet<StateId>,
}

fn problem(g: &StgGraph, current: &str, visited: &BTreeSet<StateId>) -> Result<Problem, PlanError> {
    let start = g.index_of(current).ok_or_else(|| PlanError::UnknownState(StateId::new(current)))?;
    let coverable = g.reachable_mask(g.entry_index());
    let mut targets = Vec::new();
    let mut outside = BTreeSet::new();
    for (i, s) in g.states().iter().enumerate() {
        if !coverable[i] {
            if i != start && !visited.contains(&s.id) {
                outside.insert(s.id.clone());
            }
        } else if i != start && !visited.contains(&s.id) {
            targets.push(i);
        }
    }
    Ok(Problem { start, targets, outside })
}

fn assemble(g: &StgGraph, tables: &PlanTables, order: &[usize], problem: &Problem, strategy: Strategy) -> ExplorationPlan {
    let mut walk = vec![g.state_at(problem.start).id.clone()];
    let mut edges = Vec::new();
    for leg in order.windows(2) {
        for a in tables.path(leg[0], leg[1]).expect("legs are finite") {
            let action = g.actions()[a].clone();
            walk.push(action.target.clone());
            edges.push(action);
        }
    }
    let total_steps = edges.iter().map(|e| Cost::from(e.weight)).sum();
    let covered = walk.iter().cloned().collect();
    ExplorationPlan {
        start: walk[0].clone(),
        walk,
        edges,
        total_steps,
        covered,
        targets: problem.targets.iter().map(|&t| g.state_at(t).id.clone()).collect(),
        uncoverable: problem.outside.clone(),
        strategy,
    }
}

/// Exact minimum-cost walk from `start` visiting every state reachable
/// from the entry.
pub fn plan_path(g: &StgGraph, start: &str, cfg: &PlannerConfig) -> Result<ExplorationPlan, PlanError> {
    replan(g, start, &BTreeSet::new(), cfg)
}

/// Exact plan from `current` over the states not yet `visited`. Visited
/// states still serve as relays.
pub fn replan(
    g: &StgGraph,
    current: &str,
    visited: &BTreeSet<StateId>,
    cfg: &PlannerConfig,
) -> Result<ExplorationPlan, PlanError> {
    let g = planning_graph(g, cfg)?;
    let problem = problem(&g, current, visited)?;
    let count = problem.targets.len() + 1;
    let limit = cfg.exact_limit.min(MAX_EXACT_LIMIT);
    if count > limit {
        return Err(PlanError::ExactLimitExceeded { targets: count, limit });
    }
    let mut tables = all_pairs_shortest(&g);
    let unreachable: Vec<StateId> = problem
        .targets
        .iter()
        .filter(|&&t| tables.distance(problem.start, t).is_none())
        .map(|&t| g.state_at(t).id.clone())
        .collect();
    if !unreachable.is_empty() {
        return Err(PlanError::UnreachableStates { from: g.state_at(problem.start).id.clone(), states: unreachable });
    }
    let order = solve_visit_order(&mut tables, problem.start, &problem.targets)
        .ok_or_else(|| PlanError::NoCoveringWalk { from: g.state_at(problem.start).id.clone() })?;
    Ok(assemble(&g, &tables, &order, &problem, Strategy::Exact))
}

/// Fills the DP tables for `start` plus `targets` and returns the optimal
/// first-visit order (graph indices, beginning with `start`), or `None`
/// when no walk covers every target.
fn solve_visit_order(tables: &mut PlanTables, start: usize, targets: &[usize]) -> Option<Vec<usize>> {
    let mut nodes = Vec::with_capacity(targets.len() + 1);
    nodes.push(start);
    nodes.extend_from_slice(targets);
    let m = nodes.len();
    let masks = 1usize << (m - 1);
    let mut dp = vec![UNREACHABLE; masks * m];
    let mut status = vec![NO_PREDECESSOR; masks * m];
    let dist: Vec<Cost> = nodes.iter().flat_map(|&a| nodes.iter().map(move |&b| (a, b))).map(|(a, b)| tables.raw_distance(a, b)).collect();

    dp[0] = 0;
    for mask in 1..masks {
        for j in 1..m {
            let bit = 1usize << (j - 1);
            if mask & bit == 0 {
                continue;
            }
            let prev = mask ^ bit;
            let mut best = UNREACHABLE;
            let mut arg = NO_PREDECESSOR;
            // i = 0 (the start) is only a valid predecessor of the first leg
            let candidates = std::iter::once(0usize)
                .filter(|_| prev == 0)
                .chain((1..m).filter(|&i| prev & (1usize << (i - 1)) != 0));
            for i in candidates {
                let here = dp[prev * m + i];
                let leg = dist[i * m + j];
                if here == UNREACHABLE || leg == UNREACHABLE {
                    continue;
                }
                if here + leg < best {
                    best = here + leg;
                    arg = i as u8;
                }
            }
            dp[mask * m + j] = best;
            status[mask * m + j] = arg;
        }
    }

    let full = masks - 1;
    let mut end = None;
    let mut minn = UNREACHABLE;
    for node in 0..m {
        let v = dp[full * m + node];
        if v < minn {
            minn = v;
            end = Some(node);
        }
    }
    tables.targets = nodes.clone();
    tables.dp = dp;
    tables.visit_status = status;
    let mut j = end?;

    let mut mask = full;
    let mut order = vec![nodes[j]];
    while mask != 0 {
        let i = tables.visit_status[mask * m + j] as usize;
        mask ^= 1usize << (j - 1);
        j = i;
        order.push(nodes[j]);
    }
    order.reverse();
    Some(order)
}

/// Exact DP tables for planning from `start` on `g` as given, for
/// inspection. Fails like [`replan`].
pub fn plan_tables(g: &StgGraph, start: &str, visited: &BTreeSet<StateId>) -> Result<PlanTables, PlanError> {
    let problem = problem(g, start, visited)?;
    let mut tables = all_pairs_shortest(g);
    match solve_visit_order(&mut tables, problem.start, &problem.targets) {
        Some(_) => Ok(tables),
        None => Err(PlanError::NoCoveringWalk { from: g.state_at(problem.start).id.clone() }),
    }
}

/// Nearest-unvisited-target walk. Targets that cannot be reached from
/// where the walk stands are reported as uncoverable instead of failing.
pub fn plan_path_greedy(
    g: &StgGraph,
    start: &str,
    visited: &BTreeSet<StateId>,
    cfg: &PlannerConfig,
) -> Result<ExplorationPlan, PlanError> {
    let g = planning_graph(g, cfg)?;
    let mut problem = problem(&g, start, visited)?;
    let tables = all_pairs_shortest(&g);
    let mut remaining: BTreeSet<usize> = problem.targets.iter().copied().collect();
    let mut order = vec![problem.start];
    let mut at = problem.start;
    loop {
        let next = remaining
            .iter()
            .filter_map(|&t| tables.distance(at, t).map(|c| (c, &g.state_at(t).id, t)))
            .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)))
            .map(|(_, _, t)| t);
        let Some(next) = next else { break };
        for a in tables.path(at, next).expect("finite") {
            let on_way = g.index_of(g.actions()[a].target.as_str()).expect("built graph");
            remaining.remove(&on_way);
        }
        order.push(next);
        at = next;
    }
    for t in remaining {
        problem.outside.insert(g.state_at(t).id.clone());
    }
    Ok(assemble(&g, &tables, &order, &problem, Strategy::Greedy))
}

/// Exact when the target count fits under the limit and a covering walk
/// exists, otherwise greedy (when allowed).
pub fn plan_auto(
    g: &StgGraph,
    start: &str,
    visited: &BTreeSet<StateId>,
    cfg: &PlannerConfig,
) -> Result<ExplorationPlan, PlanError> {
    match replan(g, start, visited, cfg) {
        Ok(plan) => Ok(plan),
        Err(e @ PlanError::UnknownState(_)) | Err(e @ PlanError::Graph(_)) => Err(e),
        Err(e) if !cfg.heuristic_fallback => Err(e),
        Err(e) => {
            log::debug!("exact planning from {start} unavailable ({e}); using greedy walk");
            plan_path_greedy(g, start, visited, cfg)
        }
    }
}
