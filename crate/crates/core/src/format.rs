//! STG file format: a JSON document with `entry`, `states` and `actions`.
//!
//! ```json
//! {
//!   "entry": "S0",
//!   "states": [{"id": "S0", "activity": "Main", "hierarchy": {"type": "FrameLayout", "children": []}}],
//!   "actions": [{"source": "S0", "target": "S0", "action_kind": "click", "weight": 1,
//!                "component": {"id": "btn_refresh", "kind": "resource-id"}}]
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::HierarchyNode;
use crate::stg::{ActionKind, ComponentRef, GraphError, ScreenState, StateId, StgGraph, TriggerAction};

const SECTIONS: [&str; 3] = ["entry", "states", "actions"];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("truncated document at line {line}, column {column}: section `{section}` is incomplete or missing")]
    Truncated { section: &'static str, line: usize, column: usize },
    #[error("missing section `{0}`")]
    MissingSection(&'static str),
    #[error("malformed document at line {line}, column {column}: {message}")]
    Malformed { line: usize, column: usize, message: String },
    #[error("actions[{index}]: unsupported action kind `{kind}` (expected click, long-press, back or relaunch)")]
    UnsupportedAction { index: usize, kind: String },
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    id: StateId,
    activity: String,
    #[serde(default)]
    hierarchy: Option<HierarchyNode>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    static_only: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    provisional: bool,
}

#[derive(Serialize, Deserialize)]
struct ActionDoc {
    source: StateId,
    target: StateId,
    component: ComponentRef,
    action_kind: String,
    #[serde(default = "unit_weight")]
    weight: u32,
}

fn unit_weight() -> u32 {
    1
}

#[derive(Serialize)]
struct GraphDocOut<'a> {
    entry: &'a StateId,
    states: Vec<StateDoc>,
    actions: Vec<ActionDoc>,
}

#[derive(Deserialize)]
struct GraphDocIn {
    entry: Option<StateId>,
    states: Option<Vec<StateDoc>>,
    actions: Option<Vec<ActionDoc>>,
}

pub fn to_json(g: &StgGraph) -> String {
    let doc = GraphDocOut {
        entry: g.entry(),
        states: g
            .states()
            .iter()
            .map(|s| StateDoc {
                id: s.id.clone(),
                activity: s.activity.clone(),
                hierarchy: s.hierarchy.clone(),
                static_only: s.static_only,
                provisional: s.provisional,
            })
            .collect(),
        actions: g
            .actions()
            .iter()
            .map(|a| ActionDoc {
                source: a.source.clone(),
                target: a.target.clone(),
                component: a.component.clone(),
                action_kind: a.action_kind.as_str().to_string(),
                weight: a.weight,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("graph documents always serialize")
}

pub fn from_json(text: &str) -> Result<StgGraph, FormatError> {
    let doc: GraphDocIn = serde_json::from_str(text).map_err(|e| classify(text, e))?;
    let entry = doc.entry.ok_or(FormatError::MissingSection("entry"))?;
    let states = doc.states.ok_or(FormatError::MissingSection("states"))?;
    let actions = doc.actions.ok_or(FormatError::MissingSection("actions"))?;

    let states = states
        .into_iter()
        .map(|s| ScreenState {
            id: s.id,
            activity: s.activity,
            hierarchy: s.hierarchy,
            static_only: s.static_only,
            provisional: s.provisional,
        })
        .collect();
    let actions = actions
        .into_iter()
        .enumerate()
        .map(|(index, a)| {
            let kind = ActionKind::parse(&a.action_kind)
                .ok_or(FormatError::UnsupportedAction { index, kind: a.action_kind.clone() })?;
            Ok(TriggerAction { source: a.source, target: a.target, component: a.component, action_kind: kind, weight: a.weight })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    Ok(StgGraph::build(states, actions, entry)?)
}

pub fn read_file(path: impl AsRef<Path>) -> Result<StgGraph, FormatError> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn write_file(g: &StgGraph, path: impl AsRef<Path>) -> Result<(), FormatError> {
    std::fs::write(path, to_json(g))?;
    Ok(())
}

fn classify(text: &str, e: serde_json::Error) -> FormatError {
    let (line, column) = (e.line(), e.column());
    if !e.is_eof() {
        return FormatError::Malformed { line, column, message: e.to_string() };
    }
    let started: Vec<(usize, &'static str)> = SECTIONS
        .iter()
        .filter_map(|&name| text.find(&format!("\"{name}\"")).map(|pos| (pos, name)))
        .collect();
    let first_unopened = SECTIONS.iter().copied().find(|name| !started.iter().any(|(_, s)| s == name));
    let section = match started.iter().max_by_key(|(pos, _)| *pos) {
        None => "entry",
        Some(&(pos, name)) => {
            let value = text[pos + name.len() + 2..]
                .trim_start()
                .strip_prefix(':')
                .unwrap_or_default()
                .trim_end()
                .trim_end_matches(',');
            let complete = serde_json::from_str::<serde_json::Value>(value).is_ok();
            match (complete, first_unopened) {
                (true, Some(next)) => next,
                _ => name,
            }
        }
    };
    FormatError::Truncated { section, line, column }
}
