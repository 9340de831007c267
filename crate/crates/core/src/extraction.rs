//! Graph extraction from a declared-transition descriptor and from random
//! exploration of a simulated app, and the combination of the two.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{Bounds, HierarchyNode};
use crate::merging::{merge_states_with, MergeConfig, MergeError, MergeReport};
use crate::sim::{AppModel, AppModelError, AppSimulator};
use crate::stg::{ActionKind, ComponentKind, ComponentRef, GraphError, ScreenState, StateId, StgGraph, TriggerAction};

/// Resolves the identity of a component: its resource id, else its text,
/// else its coordinates.
pub fn resolve_component_id(node: &HierarchyNode) -> ComponentRef {
    let non_empty = |s: &Option<String>| s.as_deref().filter(|v| !v.is_empty()).map(str::to_string);
    let (id, kind) = if let Some(id) = non_empty(&node.resource_id) {
        (id, ComponentKind::ResourceId)
    } else if let Some(text) = non_empty(&node.text) {
        (text, ComponentKind::Text)
    } else {
        (format!("coord:{}", node.bounds.unwrap_or_default()), ComponentKind::Coordinates)
    };
    let bounds = match kind {
        ComponentKind::Coordinates => Some(node.bounds.unwrap_or_default()),
        _ => node.bounds,
    };
    ComponentRef { id, kind, bounds, display_text: node.text.clone() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticTransition {
    pub source: String,
    pub target: String,
    pub component_id: String,
}

/// Activity transitions declared ahead of time, one per triggering component.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticDescriptor {
    pub activities: Vec<String>,
    #[serde(default)]
    pub transitions: Vec<StaticTransition>,
}

impl StaticDescriptor {
    pub fn from_json(text: &str) -> Result<Self, ExtractionError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, ExtractionError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationBudget {
    pub max_events: u32,
    pub seed: u64,
}

impl ExplorationBudget {
    pub fn new(max_events: u32, seed: u64) -> Self {
        Self { max_events, seed }
    }
}

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("descriptor declares no activities")]
    NoActivities,
    #[error("transition #{index} references undeclared activity `{activity}`")]
    DanglingActivity { index: usize, activity: String },
    #[error("exploration budget must allow at least one event")]
    EmptyBudget,
    #[error("state `{id}` belongs to activity `{dynamic}` dynamically but `{declared}` statically")]
    IncompatibleActivity { id: StateId, declared: String, dynamic: String },
    #[error(transparent)]
    App(#[from] AppModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error("cannot parse descriptor: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One placeholder state per activity (id = activity name) and one click
/// edge per declared transition. The first activity is the entry.
pub fn ingest_static(desc: &StaticDescriptor) -> Result<StgGraph, ExtractionError> {
    let entry = desc.activities.first().ok_or(ExtractionError::NoActivities)?;
    let declared: HashSet<&str> = desc.activities.iter().map(String::as_str).collect();
    let mut actions = Vec::with_capacity(desc.transitions.len());
    for (index, t) in desc.transitions.iter().enumerate() {
        for end in [&t.source, &t.target] {
            if !declared.contains(end.as_str()) {
                return Err(ExtractionError::DanglingActivity { index, activity: end.clone() });
            }
        }
        actions.push(TriggerAction::click(t.source.as_str(), t.target.as_str(), &t.component_id));
    }
    let states = desc.activities.iter().map(|a| ScreenState::placeholder(a.as_str(), a.as_str())).collect();
    Ok(StgGraph::build(states, actions, entry.as_str())?)
}

/// Random exploration: at every event pick an executable component on the
/// current screen, perform it and record the transition. States are keyed
/// by their exact rendered hierarchy, so content variations of one screen
/// show up as distinct states until merging.
///
/// The result is a pure function of `(app, budget.seed, budget.max_events)`.
pub fn dynamic_explore(app: &AppModel, budget: ExplorationBudget) -> Result<StgGraph, ExtractionError> {
    app.validate()?;
    if budget.max_events == 0 {
        return Err(ExtractionError::EmptyBudget);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut sim = AppSimulator::new(app);

    let mut states: Vec<ScreenState> = Vec::new();
    let mut by_content: HashMap<String, usize> = HashMap::new();
    let mut record = |sim: &AppSimulator<'_>, states: &mut Vec<ScreenState>| -> StateId {
        let key = format!(
            "{}\u{0}{}",
            sim.activity(),
            serde_json::to_string(sim.hierarchy()).expect("hierarchies serialize")
        );
        if let Some(&i) = by_content.get(&key) {
            return states[i].id.clone();
        }
        let id = StateId::new(format!("{}#{}", sim.activity(), states.len()));
        by_content.insert(key, states.len());
        states.push(ScreenState::new(id.clone(), sim.activity(), sim.hierarchy().clone()));
        id
    };

    let entry = record(&sim, &mut states);
    let mut current = entry.clone();
    let mut actions: Vec<TriggerAction> = Vec::new();
    let mut edge_keys: HashMap<(StateId, String, ActionKind), StateId> = HashMap::new();
    for _ in 0..budget.max_events {
        let choices = sim.available_actions();
        let pick = choices.choose(&mut rng).expect("the back key is always available").clone();
        let outcome = sim.step(&pick.component.id, pick.action_kind);
        if !outcome.bound {
            continue;
        }
        let next = record(&sim, &mut states);
        let key = (current.clone(), pick.component.id.clone(), pick.action_kind);
        match edge_keys.get(&key) {
            Some(known) if *known != next => {
                log::debug!("{} via {} observed leading to {next}, keeping {known}", current, pick.component.id);
            }
            Some(_) => {}
            None => {
                edge_keys.insert(key, next.clone());
                actions.push(TriggerAction::new(current.clone(), next.clone(), pick.component, pick.action_kind));
            }
        }
        current = next;
    }
    Ok(StgGraph::build(states, actions, entry)?)
}

/// A static edge whose trigger was observed dynamically with another target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetConflict {
    pub source: StateId,
    pub component: String,
    pub static_target: StateId,
    pub dynamic_target: StateId,
}

#[derive(Debug, Clone)]
pub struct Combined {
    pub graph: StgGraph,
    pub merge: MergeReport,
    /// Placeholder id → dynamic state that replaced it.
    pub superseded: BTreeMap<StateId, StateId>,
    pub conflicts: Vec<TargetConflict>,
}

pub fn combine(static_g: &StgGraph, dynamic_g: &StgGraph) -> Result<Combined, ExtractionError> {
    combine_with(static_g, dynamic_g, &MergeConfig::default())
}

/// Unions the two graphs. Dynamic states supersede static placeholders of
/// the same activity; static edges are re-anchored onto the dynamic state
/// that shows the triggering component (else the first dynamic state of
/// the activity). When both sources define the same trigger with different
/// targets the dynamic observation wins. The union is then merged.
pub fn combine_with(static_g: &StgGraph, dynamic_g: &StgGraph, cfg: &MergeConfig) -> Result<Combined, ExtractionError> {
    let mut first_of_activity: HashMap<&str, usize> = HashMap::new();
    for (i, s) in dynamic_g.states().iter().enumerate() {
        first_of_activity.entry(s.activity.as_str()).or_insert(i);
    }

    let mut states: Vec<ScreenState> = dynamic_g.states().to_vec();
    let mut superseded = BTreeMap::new();
    for s in static_g.states() {
        if let Some(d) = dynamic_g.state(s.id.as_str()) {
            if d.activity != s.activity {
                return Err(ExtractionError::IncompatibleActivity {
                    id: s.id.clone(),
                    declared: s.activity.clone(),
                    dynamic: d.activity.clone(),
                });
            }
        }
        let replaceable = s.hierarchy.is_none() && first_of_activity.contains_key(s.activity.as_str());
        if replaceable {
            let anchor = &dynamic_g.state_at(first_of_activity[s.activity.as_str()]).id;
            superseded.insert(s.id.clone(), anchor.clone());
        } else if dynamic_g.state(s.id.as_str()).is_none() {
            states.push(s.clone());
        }
    }

    let source_for = |id: &StateId, component: &str| -> StateId {
        match superseded.get(id) {
            None => id.clone(),
            Some(anchor) => {
                let activity = &static_g.state(id.as_str()).expect("static endpoint").activity;
                dynamic_g
                    .states()
                    .iter()
                    .find(|d| &d.activity == activity && d.has_component(component))
                    .map(|d| d.id.clone())
                    .unwrap_or_else(|| anchor.clone())
            }
        }
    };
    let target_for = |id: &StateId| superseded.get(id).cloned().unwrap_or_else(|| id.clone());

    let mut actions: Vec<TriggerAction> = dynamic_g.actions().to_vec();
    let mut keys: HashMap<(StateId, String, ActionKind), StateId> = actions
        .iter()
        .map(|a| ((a.source.clone(), a.component.id.clone(), a.action_kind), a.target.clone()))
        .collect();
    let mut conflicts = Vec::new();
    for a in static_g.actions() {
        let source = source_for(&a.source, &a.component.id);
        let target = target_for(&a.target);
        let key = (source.clone(), a.component.id.clone(), a.action_kind);
        match keys.get(&key) {
            Some(dynamic_target) if *dynamic_target != target => {
                log::warn!(
                    "{source} via {}: declared target {target}, observed {dynamic_target}; keeping the observation",
                    a.component.id
                );
                conflicts.push(TargetConflict {
                    source,
                    component: a.component.id.clone(),
                    static_target: target,
                    dynamic_target: dynamic_target.clone(),
                });
            }
            Some(_) => {}
            None => {
                // Reuse the on-screen component (bounds, text) when the
                // dynamic state shows it.
                let component = dynamic_g
                    .state(source.as_str())
                    .and_then(|d| d.hierarchy.as_ref())
                    .and_then(|h| h.executable_leaves().map(resolve_component_id).find(|c| c.id == a.component.id))
                    .unwrap_or_else(|| a.component.clone());
                keys.insert(key, target.clone());
                actions.push(TriggerAction { source, target, component, ..a.clone() });
            }
        }
    }

    let union = StgGraph::build(states, actions, dynamic_g.entry().clone())?;
    let (graph, merge) = merge_states_with(&union, cfg)?;
    Ok(Combined { graph, merge, superseded, conflicts })
}

/// Explore `app`, optionally fold in a static descriptor, and merge.
pub fn extract(
    app: &AppModel,
    descriptor: Option<&StaticDescriptor>,
    budget: ExplorationBudget,
    cfg: &MergeConfig,
) -> Result<Combined, ExtractionError> {
    let dynamic = dynamic_explore(app, budget)?;
    match descriptor {
        Some(d) => combine_with(&ingest_static(d)?, &dynamic, cfg),
        None => {
            let (graph, merge) = merge_states_with(&dynamic, cfg)?;
            Ok(Combined { graph, merge, superseded: BTreeMap::new(), conflicts: Vec::new() })
        }
    }
}

/// Rectangle used for a leaf in `coord:` ids.
pub fn coordinate_id(bounds: Bounds) -> String {
    format!("coord:{bounds}")
}
