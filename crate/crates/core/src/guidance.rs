//! Live guidance sessions.
//!
//! A session follows a tester through the app. Every observed screen is
//! mapped onto a graph state; when it is the state the plan expected the
//! plan simply advances, otherwise the session replans from wherever the
//! tester now is, over the states not yet visited. Hints name the component
//! and gesture of the next planned step. By default they are only offered
//! once the tester has idled on a page for the idle threshold.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::HierarchyNode;
use crate::merging::{map_live_state_with, signature, LiveMatch, DEFAULT_THRESHOLD};
use crate::planner::{plan_auto, planning_graph, ExplorationPlan, PlanError, PlannerConfig};
use crate::stg::{ActionKind, ComponentRef, GraphError, ScreenState, StateId, StgGraph, TriggerAction};

pub const DEFAULT_IDLE_THRESHOLD: Duration = Duration::from_secs(5);

/// Monotonic time source, relative to an arbitrary origin.
pub trait Clock: Send + Sync + fmt::Debug {
    fn now(&self) -> Duration;
}

#[derive(Debug)]
pub struct SystemClock(Instant);

impl Default for SystemClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

/// Clock that only moves when told to.
#[derive(Debug, Clone, Default)]
pub struct ManualClock(Arc<Mutex<Duration>>);

impl ManualClock {
    pub fn advance(&self, by: Duration) {
        *self.0.lock().expect("clock lock") += by;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        *self.0.lock().expect("clock lock")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HintMode {
    /// Offer hints only after the tester idles for the threshold.
    AfterIdle,
    AlwaysOn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub idle_threshold: Duration,
    pub hint_mode: HintMode,
    pub planner: PlannerConfig,
    /// Similarity needed to recognise an observed screen as a known state.
    pub match_threshold: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            idle_threshold: DEFAULT_IDLE_THRESHOLD,
            hint_mode: HintMode::AfterIdle,
            planner: PlannerConfig::default(),
            match_threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl SessionConfig {
    pub fn always_on() -> Self {
        Self { hint_mode: HintMode::AlwaysOn, ..Self::default() }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A screen as seen by the tester, with the gesture that led to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub activity: String,
    pub hierarchy: HierarchyNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_kind: Option<ActionKind>,
}

impl Observation {
    pub fn new(activity: impl Into<String>, hierarchy: HierarchyNode) -> Self {
        Self { activity: activity.into(), hierarchy, component: None, action_kind: None }
    }

    pub fn via(mut self, component: impl Into<String>, kind: ActionKind) -> Self {
        self.component = Some(component.into());
        self.action_kind = Some(kind);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hint {
    pub component: ComponentRef,
    pub action_kind: ActionKind,
    pub expected_target: StateId,
    pub step_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextHint {
    Hint(Hint),
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionUpdate {
    pub matched: StateId,
    pub similarity: f64,
    pub deviated: bool,
    pub replanned: bool,
    pub provisional: bool,
    pub repeated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    Action,
    Hint,
    Replanned,
    Provisional,
    Done,
}

/// One line of the exported session log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    /// Milliseconds since the session started.
    pub t: u64,
    pub kind: EventKind,
    pub state: StateId,
    pub component: Option<String>,
    pub deviated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub state_coverage: f64,
    pub activity_coverage: f64,
    pub steps: u64,
    pub repeats: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone)]
pub struct GuidanceSession {
    graph: Arc<StgGraph>,
    config: SessionConfig,
    plan: ExplorationPlan,
    /// Index of the next edge of `plan` to take.
    cursor: usize,
    current: StateId,
    visited_states: BTreeSet<StateId>,
    visited_activities: BTreeSet<String>,
    steps_taken: u64,
    repeats: u64,
    event_log: Vec<SessionEvent>,
    clock: Arc<dyn Clock>,
    started: Duration,
    done_logged: bool,
}

impl GuidanceSession {
    pub fn create(g: &StgGraph, start: &str, config: SessionConfig) -> Result<Self, SessionError> {
        Self::with_clock(g, start, config, Arc::new(SystemClock::default()))
    }

    pub fn with_clock(
        g: &StgGraph,
        start: &str,
        config: SessionConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, SessionError> {
        let graph = Arc::new(planning_graph(g, &config.planner)?);
        let start_idx = graph.index_of(start).ok_or_else(|| PlanError::UnknownState(StateId::new(start)))?;
        let start_state = graph.state_at(start_idx);
        let plan = plan_auto(&graph, start, &BTreeSet::new(), &config.planner)?;
        let started = clock.now();
        let mut session = Self {
            current: start_state.id.clone(),
            visited_states: BTreeSet::from([start_state.id.clone()]),
            visited_activities: BTreeSet::from([start_state.activity.clone()]),
            graph,
            config,
            plan,
            cursor: 0,
            steps_taken: 0,
            repeats: 0,
            event_log: Vec::new(),
            clock,
            started,
            done_logged: false,
        };
        session.log(EventKind::Start, None, false);
        Ok(session)
    }

    pub fn graph(&self) -> &StgGraph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<StgGraph> {
        Arc::clone(&self.graph)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn plan(&self) -> &ExplorationPlan {
        &self.plan
    }

    /// Steps of the active plan not taken yet.
    pub fn remaining_steps(&self) -> &[TriggerAction] {
        &self.plan.edges[self.cursor.min(self.plan.edges.len())..]
    }

    pub fn current(&self) -> &StateId {
        &self.current
    }

    pub fn visited_states(&self) -> &BTreeSet<StateId> {
        &self.visited_states
    }

    pub fn visited_activities(&self) -> &BTreeSet<String> {
        &self.visited_activities
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn repeats(&self) -> u64 {
        self.repeats
    }

    pub fn event_log(&self) -> &[SessionEvent] {
        &self.event_log
    }

    /// Plan targets the tester has not reached yet.
    pub fn remaining_targets(&self) -> BTreeSet<StateId> {
        self.plan.targets.difference(&self.visited_states).cloned().collect()
    }

    pub fn is_done(&self) -> bool {
        self.cursor >= self.plan.edges.len()
    }

    fn elapsed(&self) -> Duration {
        self.clock.now().saturating_sub(self.started)
    }

    fn log(&mut self, kind: EventKind, component: Option<String>, deviated: bool) {
        let t = self.elapsed().as_millis() as u64;
        self.event_log.push(SessionEvent { t, kind, state: self.current.clone(), component, deviated });
    }

    fn replan_here(&mut self) {
        let plan = plan_auto(&self.graph, self.current.as_str(), &self.visited_states, &self.config.planner);
        self.plan = match plan {
            Ok(p) => p,
            Err(e) => {
                // Only reachable through a broken graph; keep an empty plan.
                log::error!("replanning from {} failed: {e}", self.current);
                ExplorationPlan {
                    start: self.current.clone(),
                    walk: vec![self.current.clone()],
                    edges: Vec::new(),
                    total_steps: 0,
                    covered: BTreeSet::from([self.current.clone()]),
                    targets: BTreeSet::new(),
                    uncoverable: BTreeSet::new(),
                    strategy: crate::planner::Strategy::Greedy,
                }
            }
        };
        self.cursor = 0;
        self.done_logged = false;
        self.log(EventKind::Replanned, None, false);
    }

    /// The next planned move from the current state.
    pub fn next_hint(&mut self) -> NextHint {
        if self.is_done() {
            return NextHint::Done;
        }
        if self.plan.edges[self.cursor].source != self.current {
            log::warn!("plan out of step with current state {}; replanning", self.current);
            self.replan_here();
            if self.is_done() {
                return NextHint::Done;
            }
        }
        let edge = &self.plan.edges[self.cursor];
        let component = if edge.action_kind == ActionKind::Back {
            let here = self.graph.state(self.current.as_str()).expect("current state is in the graph");
            if here.has_component(&edge.component.id) {
                edge.component.clone()
            } else {
                ComponentRef::back_key()
            }
        } else {
            edge.component.clone()
        };
        NextHint::Hint(Hint {
            component,
            action_kind: edge.action_kind,
            expected_target: edge.target.clone(),
            step_index: self.cursor,
        })
    }

    /// Hint to surface after the tester idled for `elapsed` on this page.
    pub fn idle_tick(&mut self, elapsed: Duration) -> Option<Hint> {
        if self.config.hint_mode == HintMode::AfterIdle && elapsed < self.config.idle_threshold {
            return None;
        }
        match self.next_hint() {
            NextHint::Hint(h) => {
                self.log(EventKind::Hint, Some(h.component.id.clone()), false);
                Some(h)
            }
            NextHint::Done => None,
        }
    }

    /// Absorbs one tester action, identified by the screen it led to.
    pub fn apply_action(&mut self, observed: &Observation) -> SessionUpdate {
        let expected = self.plan.edges.get(self.cursor).map(|e| e.target.clone());
        let previous = self.current.clone();

        let (matched, similarity, provisional) =
            match map_live_state_with(&self.graph, &observed.hierarchy, self.config.match_threshold) {
                LiveMatch::Matched { state, similarity } => (state, similarity, false),
                LiveMatch::Unknown { similarity, .. } => (self.add_provisional(&previous, observed), similarity, true),
            };

        self.steps_taken += 1;
        let repeated = !self.visited_states.insert(matched.clone());
        if repeated {
            self.repeats += 1;
        }
        let activity = self.graph.state(matched.as_str()).expect("matched state exists").activity.clone();
        self.visited_activities.insert(activity);
        self.current = matched.clone();

        let on_plan = expected.as_ref() == Some(&matched);
        // Staying put (an unbound or self-looping component) keeps the plan.
        let deviated = !on_plan && expected.is_some() && matched != previous;
        if on_plan {
            self.cursor += 1;
        }
        self.log(EventKind::Action, observed.component.clone(), deviated);
        if provisional {
            self.log(EventKind::Provisional, observed.component.clone(), deviated);
        }

        // A finished plan resumes once the tester reaches somewhere with
        // unvisited states ahead, e.g. after relaunching from a dead end.
        let resumed = expected.is_none() && matched != previous && self.has_open_targets();
        let replanned = deviated || provisional || resumed;
        if replanned {
            self.replan_here();
        }
        if self.is_done() && !self.done_logged {
            self.done_logged = true;
            self.log(EventKind::Done, None, false);
        }
        SessionUpdate { matched, similarity, deviated, replanned, provisional, repeated }
    }

    fn has_open_targets(&self) -> bool {
        self.graph.reachable_from(self.current.as_str()).is_ok_and(|r| !r.is_subset(&self.visited_states))
    }

    /// Inserts an unknown screen as a flagged state, linked from the state
    /// the tester left when the gesture is known.
    fn add_provisional(&mut self, from: &StateId, observed: &Observation) -> StateId {
        let digest = signature(&observed.hierarchy).digest();
        let mut id = StateId::new(format!("provisional-{}", &digest[..8]));
        let mut n = 1;
        while self.graph.state(id.as_str()).is_some() {
            n += 1;
            id = StateId::new(format!("provisional-{}-{n}", &digest[..8]));
        }
        let mut state = ScreenState::new(id.clone(), observed.activity.clone(), observed.hierarchy.clone());
        state.provisional = true;

        let from_idx = self.graph.index_of(from.as_str()).expect("current state is in the graph");
        let edge = observed.component.as_ref().and_then(|cid| {
            let kind = observed.action_kind.unwrap_or(ActionKind::Click);
            if kind == ActionKind::Relaunch || self.graph.find_action(from_idx, cid, kind).is_some() {
                return None;
            }
            let component = self
                .graph
                .state_at(from_idx)
                .hierarchy
                .as_ref()
                .and_then(|h| {
                    h.executable_leaves()
                        .map(crate::extraction::resolve_component_id)
                        .find(|c| &c.id == cid)
                })
                .unwrap_or_else(|| if cid == crate::stg::BACK_KEY_ID { ComponentRef::back_key() } else { ComponentRef::resource(cid.clone()) });
            Some(TriggerAction::new(from.clone(), id.clone(), component, kind))
        });
        match self.graph.with_state(state, edge) {
            Ok(g) => {
                let g = match self.config.planner.relaunch_cost {
                    Some(cost) => g.with_relaunch_edges(cost).unwrap_or(g),
                    None => g,
                };
                self.graph = Arc::new(g);
            }
            Err(e) => log::error!("cannot add provisional state {id}: {e}"),
        }
        id
    }

    /// States counted in coverage: every state of the session graph,
    /// including placeholders, provisional states and states the planner
    /// reports as uncoverable.
    pub fn coverage_universe(&self) -> BTreeSet<StateId> {
        self.graph.states().iter().map(|s| s.id.clone()).collect()
    }

    pub fn metrics(&self) -> SessionMetrics {
        let universe = self.coverage_universe();
        let covered = universe.intersection(&self.visited_states).count();
        let activities: BTreeSet<&str> = universe
            .iter()
            .map(|id| self.graph.state(id.as_str()).expect("universe ⊆ graph").activity.as_str())
            .collect();
        let seen_activities = activities.iter().filter(|a| self.visited_activities.contains(**a)).count();
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        SessionMetrics {
            state_coverage: ratio(covered, universe.len()),
            activity_coverage: ratio(seen_activities, activities.len()),
            steps: self.steps_taken,
            repeats: self.repeats,
            elapsed_ms: self.elapsed().as_millis() as u64,
        }
    }

    /// Event log as newline-delimited JSON records.
    pub fn event_log_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.event_log {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}
