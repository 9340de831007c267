//! Exploration agents and the step-count benchmark.
//!
//! Every agent drives an [`AppSimulator`] and is scored by the number of
//! transitions it executes before every screen reachable from the entry
//! has been shown at least once. The guided agent follows a guidance
//! session's hints. DFS and BFS know the app's graph and walk it in
//! depth-first or breadth-first visiting order, travelling between
//! consecutive visits along shortest paths. The random agent taps any
//! executable component, bound or not.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::guidance::{GuidanceSession, NextHint, Observation, SessionConfig};
use crate::planner::{all_pairs_shortest, PlanTables, PlannerConfig, Strategy};
use crate::sim::{AppModel, AppModelError, AppSimulator};
use crate::stg::{ActionKind, StgGraph, TriggerAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    Guided,
    Dfs,
    Bfs,
    Random,
}

impl Agent {
    pub const ALL: [Agent; 4] = [Agent::Guided, Agent::Dfs, Agent::Bfs, Agent::Random];

    pub fn as_str(&self) -> &'static str {
        match self {
            Agent::Guided => "guided",
            Agent::Dfs => "dfs",
            Agent::Bfs => "bfs",
            Agent::Random => "random",
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown agent `{0}` (expected guided, dfs, bfs or random)")]
pub struct UnknownAgent(pub String);

impl FromStr for Agent {
    type Err = UnknownAgent;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Agent::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| UnknownAgent(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no agents selected")]
    NoAgents,
    #[error("no readable app models in {0}")]
    NoApps(PathBuf),
    #[error(transparent)]
    App(#[from] AppModelError),
    #[error("guidance failed: {0}")]
    Guidance(#[from] crate::guidance::SessionError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write results: {0}")]
    Csv(#[from] csv::Error),
}

/// Outcome of one (app, agent, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub app: String,
    pub agent: Agent,
    pub seed: u64,
    /// Steps to full coverage; `None` when the budget ran out first.
    pub steps: Option<u64>,
    pub steps_taken: u64,
    pub coverage_final: f64,
    /// Coverage before the first step and after each step.
    pub coverage_curve: Vec<f64>,
    pub wall_time_ms: f64,
    /// Whether the guided agent's plan was exact; false for baselines.
    pub exact: bool,
}

impl BenchRow {
    pub fn is_complete(&self) -> bool {
        self.steps.is_some()
    }

    /// Steps with incomplete runs charged the full budget.
    pub fn charged_steps(&self, budget: u64) -> u64 {
        self.steps.unwrap_or(budget)
    }
}

struct Tracker {
    universe: BTreeSet<String>,
    seen: BTreeSet<String>,
    curve: Vec<f64>,
    steps: u64,
    budget: u64,
}

impl Tracker {
    fn new(g: &StgGraph, start: &str, budget: u64) -> Self {
        let mask = g.reachable_mask(g.entry_index());
        let universe =
            g.states().iter().zip(mask).filter(|(_, r)| *r).map(|(s, _)| s.id.as_str().to_string()).collect();
        let mut t = Self { universe, seen: BTreeSet::new(), curve: Vec::new(), steps: 0, budget };
        t.observe(start);
        t.curve.push(t.coverage());
        t
    }

    fn observe(&mut self, screen: &str) {
        if self.universe.contains(screen) {
            self.seen.insert(screen.to_string());
        }
    }

    fn coverage(&self) -> f64 {
        if self.universe.is_empty() {
            1.0
        } else {
            self.seen.len() as f64 / self.universe.len() as f64
        }
    }

    fn full(&self) -> bool {
        self.seen.len() == self.universe.len()
    }

    fn exhausted(&self) -> bool {
        self.steps >= self.budget
    }

    fn step(&mut self, sim: &mut AppSimulator<'_>, component: &str, kind: ActionKind) {
        if kind == ActionKind::Relaunch {
            sim.relaunch();
        } else {
            sim.step(component, kind);
        }
        self.steps += 1;
        self.observe(sim.screen_id());
        self.curve.push(self.coverage());
    }
}

/// Runs one agent on `app` for at most `budget` steps.
pub fn run_agent(app: &AppModel, agent: Agent, budget: u64, seed: u64) -> Result<BenchRow, BenchError> {
    let graph = app.to_stg()?;
    run_agent_on(app, &graph, agent, budget, seed)
}

/// Like [`run_agent`] with the app's graph supplied by the caller.
pub fn run_agent_on(
    app: &AppModel,
    graph: &StgGraph,
    agent: Agent,
    budget: u64,
    seed: u64,
) -> Result<BenchRow, BenchError> {
    let clock = Instant::now();
    let mut sim = AppSimulator::with_content_seed(app, app.content_seed ^ seed);
    let mut tracker = Tracker::new(graph, sim.screen_id(), budget);
    let mut exact = false;
    match agent {
        Agent::Guided => exact = guided(graph, &mut sim, &mut tracker)?,
        Agent::Dfs => {
            let order = dfs_order(graph, seed);
            follow_order(graph, &order, &mut sim, &mut tracker);
        }
        Agent::Bfs => {
            let order = bfs_order(graph, seed);
            follow_order(graph, &order, &mut sim, &mut tracker);
        }
        Agent::Random => random_walk(&mut sim, &mut tracker, seed),
    }
    let complete = tracker.full();
    Ok(BenchRow {
        app: app.name.clone(),
        agent,
        seed,
        steps: complete.then_some(tracker.steps),
        steps_taken: tracker.steps,
        coverage_final: tracker.coverage(),
        coverage_curve: tracker.curve,
        wall_time_ms: clock.elapsed().as_secs_f64() * 1000.0,
        exact,
    })
}

fn guided(graph: &StgGraph, sim: &mut AppSimulator<'_>, tracker: &mut Tracker) -> Result<bool, BenchError> {
    let config = SessionConfig { planner: PlannerConfig::default(), ..SessionConfig::always_on() };
    let mut session = GuidanceSession::create(graph, sim.screen_id(), config)?;
    let exact = session.plan().strategy == Strategy::Exact;
    while !tracker.full() && !tracker.exhausted() {
        let NextHint::Hint(hint) = session.next_hint() else { break };
        tracker.step(sim, &hint.component.id, hint.action_kind);
        let observed = Observation::new(sim.activity(), sim.hierarchy().clone()).via(hint.component.id, hint.action_kind);
        session.apply_action(&observed);
    }
    Ok(exact)
}

fn shuffled_successors(g: &StgGraph, idx: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut next = g.successors(idx);
    next.shuffle(rng);
    next
}

/// Depth-first visiting order from the entry, neighbours in seeded order.
pub fn dfs_order(g: &StgGraph, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = vec![false; g.len()];
    let mut order = Vec::new();
    let mut stack = vec![g.entry_index()];
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        order.push(v);
        let mut next = shuffled_successors(g, v, &mut rng);
        next.retain(|&w| !seen[w]);
        next.reverse();
        stack.extend(next);
    }
    order
}

/// Breadth-first visiting order from the entry, neighbours in seeded order.
pub fn bfs_order(g: &StgGraph, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = vec![false; g.len()];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([g.entry_index()]);
    seen[g.entry_index()] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for w in shuffled_successors(g, v, &mut rng) {
            if !std::mem::replace(&mut seen[w], true) {
                queue.push_back(w);
            }
        }
    }
    order
}

fn follow_order(g: &StgGraph, order: &[usize], sim: &mut AppSimulator<'_>, tracker: &mut Tracker) {
    let tables: PlanTables = all_pairs_shortest(g);
    let mut here = g.entry_index();
    for &next in order {
        if tracker.full() || tracker.exhausted() {
            break;
        }
        if tracker.seen.contains(g.state_at(next).id.as_str()) {
            continue;
        }
        let Some(path) = tables.path(here, next) else { continue };
        for a in path {
            if tracker.exhausted() {
                return;
            }
            let edge: &TriggerAction = &g.actions()[a];
            tracker.step(sim, &edge.component.id, edge.action_kind);
        }
        here = g.index_of(sim.screen_id()).unwrap_or(next);
    }
}

fn random_walk(sim: &mut AppSimulator<'_>, tracker: &mut Tracker, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while !tracker.full() && !tracker.exhausted() {
        let actions = sim.available_actions();
        let Some(choice) = actions.choose(&mut rng) else { break };
        let (id, kind) = (choice.component.id.clone(), choice.action_kind);
        tracker.step(sim, &id, kind);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: Agent,
    pub runs: usize,
    pub completed: usize,
    /// Mean steps with incomplete runs charged the full budget.
    pub mean_steps: f64,
    pub mean_coverage: f64,
}

/// A case where the guided agent needed more steps than a baseline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub app: String,
    pub seed: u64,
    pub baseline: Agent,
    pub guided: u64,
    pub baseline_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub budget: u64,
    pub agents: Vec<AgentSummary>,
    /// Relative step saving of the guided agent against each baseline.
    pub saving_vs: BTreeMap<Agent, f64>,
    /// Violations on apps where the guided plan was exact.
    pub exact_violations: Vec<Violation>,
    /// Apps whose guided plan was heuristic.
    pub heuristic_apps: Vec<String>,
}

impl BenchSummary {
    pub fn agent(&self, agent: Agent) -> Option<&AgentSummary> {
        self.agents.iter().find(|a| a.agent == agent)
    }
}

pub fn summarize(rows: &[BenchRow], budget: u64) -> BenchSummary {
    let mut agents = Vec::new();
    for agent in Agent::ALL {
        let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.agent == agent).collect();
        if mine.is_empty() {
            continue;
        }
        let n = mine.len() as f64;
        agents.push(AgentSummary {
            agent,
            runs: mine.len(),
            completed: mine.iter().filter(|r| r.is_complete()).count(),
            mean_steps: mine.iter().map(|r| r.charged_steps(budget) as f64).sum::<f64>() / n,
            mean_coverage: mine.iter().map(|r| r.coverage_final).sum::<f64>() / n,
        });
    }
    let guided_mean = agents.iter().find(|a| a.agent == Agent::Guided).map(|a| a.mean_steps);
    let saving_vs = match guided_mean {
        Some(g) => agents
            .iter()
            .filter(|a| a.agent != Agent::Guided && a.mean_steps > 0.0)
            .map(|a| (a.agent, 1.0 - g / a.mean_steps))
            .collect(),
        None => BTreeMap::new(),
    };

    let mut exact_violations = Vec::new();
    let mut heuristic_apps = BTreeSet::new();
    for g in rows.iter().filter(|r| r.agent == Agent::Guided) {
        if !g.exact {
            heuristic_apps.insert(g.app.clone());
            continue;
        }
        let guided_steps = g.charged_steps(budget);
        for b in rows.iter().filter(|r| r.agent != Agent::Guided && r.app == g.app && r.seed == g.seed) {
            let baseline_steps = b.charged_steps(budget);
            if guided_steps > baseline_steps && b.is_complete() {
                exact_violations.push(Violation {
                    app: g.app.clone(),
                    seed: g.seed,
                    baseline: b.agent,
                    guided: guided_steps,
                    baseline_steps,
                });
            }
        }
    }
    BenchSummary { budget, agents, saving_vs, exact_violations, heuristic_apps: heuristic_apps.into_iter().collect() }
}

/// Loads every `*.json` app model under `dir`, skipping unreadable ones.
pub fn load_apps(dir: &Path) -> Result<Vec<AppModel>, BenchError> {
    let entries = std::fs::read_dir(dir).map_err(|source| BenchError::Io { path: dir.to_path_buf(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut apps = Vec::new();
    for path in paths {
        match AppModel::read_file(&path) {
            Ok(mut app) => {
                if app.name.is_empty() {
                    app.name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                }
                apps.push(app);
            }
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    Ok(apps)
}

/// Runs every (app, agent, seed) cell in parallel.
pub fn run_suite(apps: &[AppModel], agents: &[Agent], budget: u64, seeds: &[u64]) -> Result<Vec<BenchRow>, BenchError> {
    if agents.is_empty() {
        return Err(BenchError::NoAgents);
    }
    let graphs = apps.iter().map(AppModel::to_stg).collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(usize, Agent, u64)> = (0..apps.len())
        .flat_map(|a| agents.iter().flat_map(move |&ag| seeds.iter().map(move |&s| (a, ag, s))))
        .collect();
    cells.into_par_iter().map(|(a, agent, seed)| run_agent_on(&apps[a], &graphs[a], agent, budget, seed)).collect()
}

/// Loads the apps in `dir` and runs the full table.
pub fn run_benchmark(
    dir: &Path,
    agents: &[Agent],
    budget: u64,
    seeds: &[u64],
) -> Result<(Vec<BenchRow>, BenchSummary), BenchError> {
    let apps = load_apps(dir)?;
    if apps.is_empty() {
        return Err(BenchError::NoApps(dir.to_path_buf()));
    }
    let rows = run_suite(&apps, agents, budget, seeds)?;
    let summary = summarize(&rows, budget);
    Ok((rows, summary))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    app: &'a str,
    agent: Agent,
    seed: u64,
    steps: Option<u64>,
    coverage_final: f64,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    app: &'a str,
    agent: Agent,
    seed: u64,
    step: usize,
    coverage: f64,
}

/// Path of the coverage-curve file that accompanies `results`.
pub fn curves_path(results: &Path) -> PathBuf {
    let stem = results.file_stem().unwrap_or_default().to_string_lossy();
    results.with_file_name(format!("{stem}.curves.csv"))
}

pub fn write_results<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow { app: &r.app, agent: r.agent, seed: r.seed, steps: r.steps, coverage_final: r.coverage_final })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_curves<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        for (step, &coverage) in r.coverage_curve.iter().enumerate() {
            w.serialize(CurveRow { app: &r.app, agent: r.agent, seed: r.seed, step, coverage })?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `results` and its sibling curves file.
pub fn write_outputs(rows: &[BenchRow], results: &Path) -> Result<PathBuf, BenchError> {
    let open = |p: &Path| std::fs::File::create(p).map_err(|source| BenchError::Io { path: p.to_path_buf(), source });
    write_results(rows, open(results)?)?;
    let curves = curves_path(results);
    write_curves(rows, open(&curves)?)?;
    Ok(curves)
}

/// Mean coverage at each step index over `rows`, padding finished runs
/// with their final value.
pub fn mean_curve(rows: &[&BenchRow]) -> Vec<f64> {
    let len = rows.iter().map(|r| r.coverage_curve.len()).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let sum: f64 = rows
                .iter()
                .map(|r| r.coverage_curve.get(k).or(r.coverage_curve.last()).copied().unwrap_or(0.0))
                .sum();
            sum / rows.len() as f64
        })
        .collect()
}
