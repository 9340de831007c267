//! The action-annotated state-transition graph.
//!
//! Nodes are abstract UI pages ([`ScreenState`]); edges are the trigger
//! actions ([`TriggerAction`]) that move the app from one page to another.
//! A graph is validated once by [`StgGraph::build`] and immutable after that.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{Bounds, HierarchyNode};

/// Component id of the hardware back key.
pub const BACK_KEY_ID: &str = "touch_back";
/// Navigation-bar slot of the back key on the reference 1080x2340 screen.
pub const BACK_KEY_BOUNDS: Bounds = Bounds::new(140, 2220, 400, 2340);
/// Component id carried by synthetic app-restart edges.
pub const RELAUNCH_ID: &str = "relaunch";
/// Default step cost of a synthetic relaunch edge.
pub const DEFAULT_RELAUNCH_COST: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(String);

impl StateId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&self.0)
    }
}

impl Borrow<str> for StateId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for StateId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<String> for StateId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    ResourceId,
    Text,
    Coordinates,
}

/// Identity of the GUI component a trigger action operates on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentRef {
    pub id: String,
    pub kind: ComponentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default, rename = "text", skip_serializing_if = "Option::is_none")]
    pub display_text: Option<String>,
}

impl ComponentRef {
    pub fn resource(id: impl Into<String>) -> Self {
        Self { id: id.into(), kind: ComponentKind::ResourceId, bounds: None, display_text: None }
    }

    pub fn back_key() -> Self {
        Self {
            id: BACK_KEY_ID.to_string(),
            kind: ComponentKind::Coordinates,
            bounds: Some(BACK_KEY_BOUNDS),
            display_text: Some("back".to_string()),
        }
    }

    pub fn relaunch() -> Self {
        Self::resource(RELAUNCH_ID)
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = Some(bounds);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionKind {
    Click,
    LongPress,
    Back,
    Relaunch,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [Self::Click, Self::LongPress, Self::Back, Self::Relaunch];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Click => "click",
            Self::LongPress => "long-press",
            Self::Back => "back",
            Self::Relaunch => "relaunch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// One abstract UI page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScreenState {
    pub id: StateId,
    pub activity: String,
    /// `None` for placeholders that were only declared statically.
    pub hierarchy: Option<HierarchyNode>,
    pub static_only: bool,
    /// Added during a live session for a screen the graph did not know.
    pub provisional: bool,
}

impl ScreenState {
    pub fn new(id: impl Into<StateId>, activity: impl Into<String>, hierarchy: HierarchyNode) -> Self {
        Self {
            id: id.into(),
            activity: activity.into(),
            hierarchy: Some(hierarchy),
            static_only: false,
            provisional: false,
        }
    }

    pub fn placeholder(id: impl Into<StateId>, activity: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            activity: activity.into(),
            hierarchy: None,
            static_only: true,
            provisional: false,
        }
    }

    /// Whether some executable leaf of this screen resolves to `component_id`.
    pub fn has_component(&self, component_id: &str) -> bool {
        self.hierarchy.as_ref().is_some_and(|h| {
            h.executable_leaves()
                .any(|n| crate::extraction::resolve_component_id(n).id == component_id)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerAction {
    pub source: StateId,
    pub target: StateId,
    pub component: ComponentRef,
    pub action_kind: ActionKind,
    pub weight: u32,
}

impl TriggerAction {
    pub fn new(
        source: impl Into<StateId>,
        target: impl Into<StateId>,
        component: ComponentRef,
        action_kind: ActionKind,
    ) -> Self {
        Self { source: source.into(), target: target.into(), component, action_kind, weight: 1 }
    }

    pub fn click(source: impl Into<StateId>, target: impl Into<StateId>, component_id: &str) -> Self {
        Self::new(source, target, ComponentRef::resource(component_id), ActionKind::Click)
    }

    pub fn with_weight(mut self, weight: u32) -> Self {
        self.weight = weight;
        self
    }

    fn determinism_key(&self) -> (&StateId, &str, ActionKind) {
        (&self.source, self.component.id.as_str(), self.action_kind)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("state id must not be empty")]
    EmptyStateId,
    #[error("duplicate state id `{0}`")]
    DuplicateState(StateId),
    #[error("entry state `{0}` is not declared")]
    MissingEntry(StateId),
    #[error("action #{action} references undeclared state `{state}`")]
    DanglingEndpoint { action: usize, state: StateId },
    #[error("action #{action} has an empty component id")]
    EmptyComponentId { action: usize },
    #[error("action #{action}: coordinate component `{component}` has no bounds")]
    MissingBounds { action: usize, component: String },
    #[error("action #{action} has zero weight")]
    ZeroWeight { action: usize },
    #[error("action #{action}: relaunch edges must target the entry state")]
    RelaunchTarget { action: usize },
    #[error("non-deterministic action: `{state}` via `{component}` ({kind}) has more than one edge")]
    NonDeterministic { state: StateId, component: String, kind: ActionKind },
    #[error("unknown state `{0}`")]
    UnknownState(StateId),
}

/// Directed multigraph of screen states and trigger actions.
#[derive(Debug, Clone)]
pub struct StgGraph {
    states: Vec<ScreenState>,
    actions: Vec<TriggerAction>,
    entry: usize,
    index: HashMap<StateId, usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl PartialEq for StgGraph {
    fn eq(&self, other: &Self) -> bool {
        self.entry() == other.entry() && self.states == other.states && self.actions == other.actions
    }
}

impl Eq for StgGraph {}

impl StgGraph {
    /// Validates and indexes a graph.
    pub fn build(
        states: Vec<ScreenState>,
        actions: Vec<TriggerAction>,
        entry: impl Into<StateId>,
    ) -> Result<Self, GraphError> {
        let entry = entry.into();
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if s.id.as_str().is_empty() {
                return Err(GraphError::EmptyStateId);
            }
            if index.insert(s.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateState(s.id.clone()));
            }
        }
        let entry_idx = *index.get(&entry).ok_or_else(|| GraphError::MissingEntry(entry.clone()))?;

        let mut outgoing = vec![Vec::new(); states.len()];
        let mut incoming = vec![Vec::new(); states.len()];
        let mut keys = HashSet::with_capacity(actions.len());
        for (a, action) in actions.iter().enumerate() {
            let src = *index
                .get(&action.source)
                .ok_or_else(|| GraphError::DanglingEndpoint { action: a, state: action.source.clone() })?;
            let dst = *index
                .get(&action.target)
                .ok_or_else(|| GraphError::DanglingEndpoint { action: a, state: action.target.clone() })?;
            if action.component.id.is_empty() {
                return Err(GraphError::EmptyComponentId { action: a });
            }
            if action.component.kind == ComponentKind::Coordinates && action.component.bounds.is_none() {
                return Err(GraphError::MissingBounds { action: a, component: action.component.id.clone() });
            }
            if action.weight == 0 {
                return Err(GraphError::ZeroWeight { action: a });
            }
            if action.action_kind == ActionKind::Relaunch && dst != entry_idx {
                return Err(GraphError::RelaunchTarget { action: a });
            }
            if !keys.insert(action.determinism_key()) {
                return Err(GraphError::NonDeterministic {
                    state: action.source.clone(),
                    component: action.component.id.clone(),
                    kind: action.action_kind,
                });
            }
            outgoing[src].push(a);
            incoming[dst].push(a);
        }
        drop(keys);

        Ok(Self { states, actions, entry: entry_idx, index, outgoing, incoming })
    }

    pub fn states(&self) -> &[ScreenState] {
        &self.states
    }

    pub fn actions(&self) -> &[TriggerAction] {
        &self.actions
    }

    pub fn entry(&self) -> &StateId {
        &self.states[self.entry].id
    }

    pub fn entry_index(&self) -> usize {
        self.entry
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Always false for a built graph; the entry state exists.
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize, GraphError> {
        self.index_of(id).ok_or_else(|| GraphError::UnknownState(StateId::new(id)))
    }

    pub fn state(&self, id: &str) -> Option<&ScreenState> {
        self.index_of(id).map(|i| &self.states[i])
    }

    pub fn state_at(&self, idx: usize) -> &ScreenState {
        &self.states[idx]
    }

    pub fn outgoing(&self, idx: usize) -> impl Iterator<Item = &TriggerAction> + '_ {
        self.outgoing[idx].iter().map(|&a| &self.actions[a])
    }

    pub fn incoming(&self, idx: usize) -> impl Iterator<Item = &TriggerAction> + '_ {
        self.incoming[idx].iter().map(|&a| &self.actions[a])
    }

    /// Distinct successor indices in first-edge order.
    pub fn successors(&self, idx: usize) -> Vec<usize> {
        let mut seen = Vec::new();
        for a in self.outgoing(idx) {
            let t = self.index[&a.target];
            if !seen.contains(&t) {
                seen.push(t);
            }
        }
        seen
    }

    pub fn predecessors(&self, idx: usize) -> Vec<usize> {
        let mut seen = Vec::new();
        for a in self.incoming(idx) {
            let s = self.index[&a.source];
            if !seen.contains(&s) {
                seen.push(s);
            }
        }
        seen
    }

    /// The action leaving `source` through `component_id` with `kind`.
    pub fn find_action(&self, source: usize, component_id: &str, kind: ActionKind) -> Option<&TriggerAction> {
        self.outgoing(source).find(|a| a.component.id == component_id && a.action_kind == kind)
    }

    /// Reachability mask over state indices, by BFS.
    pub fn reachable_mask(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            for &a in &self.outgoing[u] {
                let v = self.index[&self.actions[a].target];
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// States reachable from `from` over directed edges, including `from`.
    pub fn reachable_from(&self, from: &str) -> Result<BTreeSet<StateId>, GraphError> {
        let idx = self.require(from)?;
        Ok(self
            .reachable_mask(idx)
            .into_iter()
            .enumerate()
            .filter(|(_, r)| *r)
            .map(|(i, _)| self.states[i].id.clone())
            .collect())
    }

    pub fn activities(&self) -> BTreeSet<&str> {
        self.states.iter().map(|s| s.activity.as_str()).collect()
    }

    /// Copy of this graph with a restart edge from every non-entry state
    /// that lacks one. Restarts make every state reachable from the entry
    /// mutually reachable.
    pub fn with_relaunch_edges(&self, cost: u32) -> Result<StgGraph, GraphError> {
        let mut actions = self.actions.clone();
        let entry = self.entry().clone();
        for (i, s) in self.states.iter().enumerate() {
            if i == self.entry || self.find_action(i, RELAUNCH_ID, ActionKind::Relaunch).is_some() {
                continue;
            }
            actions.push(
                TriggerAction::new(s.id.clone(), entry.clone(), ComponentRef::relaunch(), ActionKind::Relaunch)
                    .with_weight(cost),
            );
        }
        StgGraph::build(self.states.clone(), actions, entry)
    }

    /// Copy of this graph with one more state and optional incoming edge.
    pub fn with_state(&self, state: ScreenState, edge: Option<TriggerAction>) -> Result<StgGraph, GraphError> {
        let mut states = self.states.clone();
        states.push(state);
        let mut actions = self.actions.clone();
        actions.extend(edge);
        StgGraph::build(states, actions, self.entry().clone())
    }

    pub fn into_parts(self) -> (Vec<ScreenState>, Vec<TriggerAction>, StateId) {
        let entry = self.states[self.entry].id.clone();
        (self.states, self.actions, entry)
    }
}
