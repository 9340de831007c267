//! Simulated app runtime standing in for a device.
//!
//! An [`AppModel`] lists screens (each with a component-tree template and
//! optional dynamic text slots) and the transition rules between them.
//! [`AppSimulator`] executes actions against the model and renders each
//! screen with freshly drawn text for its dynamic slots, so repeated visits
//! to one screen produce the same layout with different content.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::resolve_component_id;
use crate::hierarchy::HierarchyNode;
use crate::stg::{
    ActionKind, ComponentRef, GraphError, ScreenState, StgGraph, TriggerAction, BACK_KEY_ID, RELAUNCH_ID,
};

const VOCABULARY: &[&str] = &[
    "Breakfast", "Groceries", "Salary", "Rent", "Coffee", "Taxi", "Books", "Gift", "Refund", "Transfer",
    "Savings", "Lunch", "Fuel", "Cinema", "Pharmacy", "Bonus",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppScreen {
    pub screen_id: String,
    pub activity: String,
    pub hierarchy: HierarchyNode,
    /// Resource ids of nodes whose text is redrawn on every visit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dynamic_text_slots: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRule {
    pub screen_id: String,
    pub component_id: String,
    pub action_kind: ActionKind,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppModel {
    #[serde(default)]
    pub name: String,
    pub screens: Vec<AppScreen>,
    pub rules: Vec<TransitionRule>,
    pub entry: String,
    #[serde(default)]
    pub content_seed: u64,
}

#[derive(Debug, Error)]
pub enum AppModelError {
    #[error("app model has no entry screen `{0}`")]
    MissingEntry(String),
    #[error("duplicate screen id `{0}`")]
    DuplicateScreen(String),
    #[error("rule #{rule} references unknown screen `{screen}`")]
    UnknownScreen { rule: usize, screen: String },
    #[error("rule #{rule}: screen `{screen}` has no component `{component}`")]
    UnknownComponent { rule: usize, screen: String, component: String },
    #[error("rule #{rule} duplicates an earlier rule for `{screen}` / `{component}`")]
    DuplicateRule { rule: usize, screen: String, component: String },
    #[error("rule #{rule}: relaunch must lead to the entry screen")]
    RelaunchTarget { rule: usize },
    #[error("cannot read app model: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse app model: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl AppModel {
    pub fn from_json(text: &str) -> Result<Self, AppModelError> {
        let app: AppModel = serde_json::from_str(text)?;
        app.validate()?;
        Ok(app)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, AppModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("app models always serialize")
    }

    pub fn screen_index(&self, screen_id: &str) -> Option<usize> {
        self.screens.iter().position(|s| s.screen_id == screen_id)
    }

    pub fn screen(&self, screen_id: &str) -> Option<&AppScreen> {
        self.screen_index(screen_id).map(|i| &self.screens[i])
    }

    pub fn validate(&self) -> Result<(), AppModelError> {
        let mut ids = HashSet::new();
        for s in &self.screens {
            if !ids.insert(s.screen_id.as_str()) {
                return Err(AppModelError::DuplicateScreen(s.screen_id.clone()));
            }
        }
        if !ids.contains(self.entry.as_str()) {
            return Err(AppModelError::MissingEntry(self.entry.clone()));
        }
        let mut seen = HashSet::new();
        for (i, r) in self.rules.iter().enumerate() {
            let screen = self
                .screen(&r.screen_id)
                .ok_or_else(|| AppModelError::UnknownScreen { rule: i, screen: r.screen_id.clone() })?;
            if !ids.contains(r.target.as_str()) {
                return Err(AppModelError::UnknownScreen { rule: i, screen: r.target.clone() });
            }
            if r.action_kind == ActionKind::Relaunch && r.target != self.entry {
                return Err(AppModelError::RelaunchTarget { rule: i });
            }
            if component_on(screen, &r.component_id).is_none() && !is_system_key(&r.component_id) {
                return Err(AppModelError::UnknownComponent {
                    rule: i,
                    screen: r.screen_id.clone(),
                    component: r.component_id.clone(),
                });
            }
            if !seen.insert((r.screen_id.as_str(), r.component_id.as_str(), r.action_kind)) {
                return Err(AppModelError::DuplicateRule {
                    rule: i,
                    screen: r.screen_id.clone(),
                    component: r.component_id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Target screen of the rule for `(screen, component, kind)`.
    pub fn lookup(&self, screen_id: &str, component_id: &str, kind: ActionKind) -> Option<&str> {
        if kind == ActionKind::Relaunch {
            return Some(self.entry.as_str());
        }
        self.rules
            .iter()
            .find(|r| r.screen_id == screen_id && r.component_id == component_id && r.action_kind == kind)
            .map(|r| r.target.as_str())
    }

    /// Ground-truth graph of the model: one state per screen (id = screen
    /// id), one edge per rule.
    pub fn to_stg(&self) -> Result<StgGraph, AppModelError> {
        let states = self
            .screens
            .iter()
            .map(|s| ScreenState::new(s.screen_id.as_str(), s.activity.as_str(), s.hierarchy.clone()))
            .collect();
        let actions = self
            .rules
            .iter()
            .map(|r| {
                let screen = self.screen(&r.screen_id).expect("validated");
                let mut edge = TriggerAction::new(
                    r.screen_id.as_str(),
                    r.target.as_str(),
                    component_ref(screen, &r.component_id),
                    r.action_kind,
                );
                if r.action_kind == ActionKind::Relaunch {
                    edge.weight = crate::stg::DEFAULT_RELAUNCH_COST;
                }
                edge
            })
            .collect();
        Ok(StgGraph::build(states, actions, self.entry.as_str())?)
    }
}

fn is_system_key(component_id: &str) -> bool {
    component_id == BACK_KEY_ID || component_id == RELAUNCH_ID
}

fn component_on<'a>(screen: &'a AppScreen, component_id: &str) -> Option<&'a HierarchyNode> {
    screen.hierarchy.executable_leaves().find(|n| resolve_component_id(n).id == component_id)
}

fn component_ref(screen: &AppScreen, component_id: &str) -> ComponentRef {
    match component_on(screen, component_id) {
        Some(node) => resolve_component_id(node),
        None if component_id == RELAUNCH_ID => ComponentRef::relaunch(),
        None => ComponentRef::back_key(),
    }
}

/// One executable action available on the current screen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailableAction {
    pub component: ComponentRef,
    pub action_kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub from: String,
    pub to: String,
    /// False when no rule matched and the screen stayed put.
    pub bound: bool,
}

/// Executes actions against an [`AppModel`].
#[derive(Debug, Clone)]
pub struct AppSimulator<'a> {
    app: &'a AppModel,
    index: HashMap<&'a str, usize>,
    current: usize,
    rendered: HierarchyNode,
    rng: ChaCha8Rng,
}

impl<'a> AppSimulator<'a> {
    pub fn new(app: &'a AppModel) -> Self {
        Self::with_content_seed(app, app.content_seed)
    }

    pub fn with_content_seed(app: &'a AppModel, seed: u64) -> Self {
        let index: HashMap<&str, usize> =
            app.screens.iter().enumerate().map(|(i, s)| (s.screen_id.as_str(), i)).collect();
        let current = index[app.entry.as_str()];
        let mut sim = Self {
            app,
            index,
            current,
            rendered: app.screens[current].hierarchy.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        sim.rendered = sim.render(current);
        sim
    }

    pub fn app(&self) -> &AppModel {
        self.app
    }

    pub fn screen_id(&self) -> &str {
        &self.app.screens[self.current].screen_id
    }

    pub fn activity(&self) -> &str {
        &self.app.screens[self.current].activity
    }

    /// The screen as currently displayed, dynamic text included.
    pub fn hierarchy(&self) -> &HierarchyNode {
        &self.rendered
    }

    pub fn available_actions(&self) -> Vec<AvailableAction> {
        let screen = &self.app.screens[self.current];
        let mut out = Vec::new();
        for leaf in screen.hierarchy.executable_leaves() {
            let component = resolve_component_id(leaf);
            if leaf.clickable {
                out.push(AvailableAction { component: component.clone(), action_kind: ActionKind::Click });
            }
            if leaf.long_clickable {
                out.push(AvailableAction { component, action_kind: ActionKind::LongPress });
            }
        }
        out.push(AvailableAction { component: ComponentRef::back_key(), action_kind: ActionKind::Back });
        for r in self.app.rules.iter().filter(|r| r.screen_id == screen.screen_id) {
            if r.action_kind == ActionKind::Relaunch {
                continue;
            }
            if !out.iter().any(|a| a.component.id == r.component_id && a.action_kind == r.action_kind) {
                out.push(AvailableAction { component: component_ref(screen, &r.component_id), action_kind: r.action_kind });
            }
        }
        out
    }

    /// Performs one action. Unbound actions leave the screen (and its
    /// rendered content) unchanged.
    pub fn step(&mut self, component_id: &str, kind: ActionKind) -> StepOutcome {
        let from = self.screen_id().to_string();
        match self.app.lookup(&from, component_id, kind) {
            Some(target) => {
                let idx = self.index[target];
                self.current = idx;
                self.rendered = self.render(idx);
                StepOutcome { from, to: target.to_string(), bound: true }
            }
            None => {
                log::debug!("no rule for {component_id} ({kind}) on {from}; screen unchanged");
                StepOutcome { to: from.clone(), from, bound: false }
            }
        }
    }

    pub fn relaunch(&mut self) {
        self.step(RELAUNCH_ID, ActionKind::Relaunch);
    }

    fn render(&mut self, idx: usize) -> HierarchyNode {
        let screen = &self.app.screens[idx];
        let mut tree = screen.hierarchy.clone();
        if !screen.dynamic_text_slots.is_empty() {
            fill_slots(&mut tree, &screen.dynamic_text_slots, &mut self.rng);
        }
        tree
    }
}

fn fill_slots(node: &mut HierarchyNode, slots: &[String], rng: &mut ChaCha8Rng) {
    if node.resource_id.as_ref().is_some_and(|id| slots.contains(id)) {
        let word = VOCABULARY.choose(rng).expect("vocabulary is not empty");
        node.text = Some(word.to_string());
    }
    for child in &mut node.children {
        fill_slots(child, slots, rng);
    }
}

/// A screen with its dynamic slots filled from `content_seed`.
pub fn render_screen(app: &AppModel, screen_id: &str, content_seed: u64) -> Option<HierarchyNode> {
    let screen = app.screen(screen_id)?;
    let mut tree = screen.hierarchy.clone();
    fill_slots(&mut tree, &screen.dynamic_text_slots, &mut ChaCha8Rng::seed_from_u64(content_seed));
    Some(tree)
}

/// Functional form of [`AppSimulator::step`] for a single transition.
pub fn step_app(app: &AppModel, screen_id: &str, component_id: &str, kind: ActionKind, content_seed: u64) -> HierarchyNode {
    let Some(idx) = app.screen_index(screen_id) else {
        log::warn!("unknown screen {screen_id}");
        return HierarchyNode::new("FrameLayout");
    };
    match app.lookup(screen_id, component_id, kind) {
        Some(target) => render_screen(app, target, content_seed).expect("validated"),
        None => {
            log::debug!("no rule for {component_id} ({kind}) on {screen_id}; screen unchanged");
            app.screens[idx].hierarchy.clone()
        }
    }
}
