//! Content-agnostic hierarchy signatures, context-aware merging of
//! near-duplicate states, and mapping of live screens onto graph states.
//!
//! A signature is the multiset of `(component type, resource id, depth)`
//! triples of a hierarchy; text and image content never contribute.
//! Similarity is the Dice coefficient over those multisets.
//!
//! Merging runs in two passes. The first collapses states whose signatures
//! are equal. The second collapses states whose signatures are similar
//! (at or above the state threshold) *and* whose neighbourhoods agree:
//! some predecessor of one is similar to some predecessor of the other, and
//! likewise for successors. The entry state satisfies the predecessor side
//! trivially. The second pass repeats until nothing more merges, so the
//! result is a fixpoint and merging it again is a no-op.
//!
//! States are only ever merged with states of the same activity.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::HierarchyNode;
use crate::stg::{ActionKind, GraphError, ScreenState, StateId, StgGraph, TriggerAction};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentSignature {
    pub component_type: String,
    pub resource_id: String,
    pub depth: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HierarchySignature {
    counts: BTreeMap<ComponentSignature, usize>,
    total: usize,
}

impl HierarchySignature {
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, element: &ComponentSignature) -> usize {
        self.counts.get(element).copied().unwrap_or(0)
    }

    pub fn elements(&self) -> impl Iterator<Item = (&ComponentSignature, usize)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Size of the multiset intersection.
    pub fn overlap(&self, other: &HierarchySignature) -> usize {
        let (small, large) = if self.counts.len() <= other.counts.len() { (self, other) } else { (other, self) };
        small.counts.iter().map(|(k, &n)| n.min(large.count(k))).sum()
    }

    /// Short stable hex digest, used to name provisional states.
    pub fn digest(&self) -> String {
        // FNV-1a over the canonical element listing
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (k, n) in &self.counts {
            for b in format!("{}|{}|{}|{};", k.component_type, k.resource_id, k.depth, n).bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        format!("{h:016x}")
    }
}

pub fn signature(hierarchy: &HierarchyNode) -> HierarchySignature {
    let mut sig = HierarchySignature::default();
    for (node, depth) in hierarchy.walk() {
        let key = ComponentSignature {
            component_type: node.component_type.clone(),
            resource_id: node.resource_id.clone().unwrap_or_default(),
            depth,
        };
        *sig.counts.entry(key).or_default() += 1;
        sig.total += 1;
    }
    sig
}

/// Signature of a state; placeholders have the empty signature.
pub fn state_signature(state: &ScreenState) -> HierarchySignature {
    state.hierarchy.as_ref().map(signature).unwrap_or_default()
}

/// Dice coefficient `2|a ∩ b| / (|a| + |b|)`; two empty signatures are
/// fully similar.
pub fn similarity(a: &HierarchySignature, b: &HierarchySignature) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    (2 * a.overlap(b)) as f64 / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    pub state_threshold: f64,
    pub context_threshold: f64,
}

impl Default for MergeConfig {
    fn default() -> Self {
        Self { state_threshold: DEFAULT_THRESHOLD, context_threshold: DEFAULT_THRESHOLD }
    }
}

impl MergeConfig {
    pub fn uniform(threshold: f64) -> Self {
        Self { state_threshold: threshold, context_threshold: threshold }
    }
}

/// An edge dropped because two merged states disagreed on where the same
/// component leads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeConflict {
    pub source: StateId,
    pub component: String,
    pub action_kind: ActionKind,
    pub kept_target: StateId,
    pub dropped_target: StateId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub canonical_of: BTreeMap<StateId, StateId>,
    pub pass1_merges: usize,
    pub pass2_merges: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conflicts: Vec<EdgeConflict>,
}

impl MergeReport {
    pub fn canonical(&self, id: &str) -> Option<&StateId> {
        self.canonical_of.get(id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("merge reports always serialize")
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MergeError {
    #[error("threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn check_threshold(t: f64) -> Result<(), MergeError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(MergeError::InvalidThreshold(t))
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Picks the class representative: the entry if it is a member, otherwise
/// the smallest state id. Returns the representative index for every state.
fn representatives(g: &StgGraph, sets: &mut DisjointSet) -> Vec<usize> {
    let n = g.len();
    let mut best: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let root = sets.find(i);
        let slot = best.entry(root).or_insert(i);
        let cur = *slot;
        let better = if cur == g.entry_index() {
            false
        } else if i == g.entry_index() {
            true
        } else {
            g.state_at(i).id < g.state_at(cur).id
        };
        if better {
            *slot = i;
        }
    }
    (0..n).map(|i| best[&sets.find(i)]).collect()
}

/// Rewrites `g` so every state is replaced by its representative.
fn collapse(g: &StgGraph, rep: &[usize], conflicts: &mut Vec<EdgeConflict>) -> Result<StgGraph, GraphError> {
    let states: Vec<ScreenState> =
        (0..g.len()).filter(|&i| rep[i] == i).map(|i| g.state_at(i).clone()).collect();
    let id = |i: &StateId| g.state_at(rep[g.index_of(i.as_str()).expect("edge endpoints exist")]).id.clone();

    let mut kept: HashMap<(StateId, String, ActionKind), StateId> = HashMap::new();
    let mut actions = Vec::with_capacity(g.actions().len());
    for a in g.actions() {
        let (source, target) = (id(&a.source), id(&a.target));
        let key = (source.clone(), a.component.id.clone(), a.action_kind);
        match kept.get(&key) {
            Some(existing) if *existing == target => {}
            Some(existing) => conflicts.push(EdgeConflict {
                source,
                component: a.component.id.clone(),
                action_kind: a.action_kind,
                kept_target: existing.clone(),
                dropped_target: target,
            }),
            None => {
                kept.insert(key, target.clone());
                actions.push(TriggerAction { source, target, ..a.clone() });
            }
        }
    }
    let entry = g.state_at(rep[g.entry_index()]).id.clone();
    StgGraph::build(states, actions, entry)
}

fn any_similar(a: &[usize], b: &[usize], sigs: &[HierarchySignature], threshold: f64) -> bool {
    a.iter().any(|&x| b.iter().any(|&y| similarity(&sigs[x], &sigs[y]) >= threshold))
}

pub fn merge_states(g: &StgGraph, threshold: f64) -> Result<(StgGraph, MergeReport), MergeError> {
    merge_states_with(g, &MergeConfig::uniform(threshold))
}

pub fn merge_states_with(g: &StgGraph, cfg: &MergeConfig) -> Result<(StgGraph, MergeReport), MergeError> {
    check_threshold(cfg.state_threshold)?;
    check_threshold(cfg.context_threshold)?;

    let mut report = MergeReport {
        canonical_of: g.states().iter().map(|s| (s.id.clone(), s.id.clone())).collect(),
        ..MergeReport::default()
    };
    let follow = |report: &mut MergeReport, before: &StgGraph, rep: &[usize]| {
        for canon in report.canonical_of.values_mut() {
            let idx = before.index_of(canon.as_str()).expect("canonical ids stay in the graph");
            *canon = before.state_at(rep[idx]).id.clone();
        }
    };

    // pass 1: identical signatures
    let sigs: Vec<_> = g.states().iter().map(state_signature).collect();
    let mut sets = DisjointSet::new(g.len());
    let mut groups: BTreeMap<(&str, &HierarchySignature), usize> = BTreeMap::new();
    for (i, s) in g.states().iter().enumerate() {
        match groups.get(&(s.activity.as_str(), &sigs[i])) {
            Some(&first) => {
                if sets.union(first, i) {
                    report.pass1_merges += 1;
                }
            }
            None => {
                groups.insert((s.activity.as_str(), &sigs[i]), i);
            }
        }
    }
    let rep = representatives(g, &mut sets);
    let mut current = collapse(g, &rep, &mut report.conflicts)?;
    follow(&mut report, g, &rep);

    // pass 2: similar signatures with similar context, to a fixpoint
    loop {
        let sigs: Vec<_> = current.states().iter().map(state_signature).collect();
        let preds: Vec<_> = (0..current.len()).map(|i| current.predecessors(i)).collect();
        let succs: Vec<_> = (0..current.len()).map(|i| current.successors(i)).collect();
        let entry = current.entry_index();
        let mut sets = DisjointSet::new(current.len());
        let mut merged = 0;
        for i in 0..current.len() {
            for j in (i + 1)..current.len() {
                if current.state_at(i).activity != current.state_at(j).activity
                    || similarity(&sigs[i], &sigs[j]) < cfg.state_threshold
                {
                    continue;
                }
                let pred_ok = i == entry
                    || j == entry
                    || any_similar(&preds[i], &preds[j], &sigs, cfg.context_threshold);
                if pred_ok && any_similar(&succs[i], &succs[j], &sigs, cfg.context_threshold) && sets.union(i, j) {
                    merged += 1;
                }
            }
        }
        if merged == 0 {
            break;
        }
        report.pass2_merges += merged;
        let rep = representatives(&current, &mut sets);
        let next = collapse(&current, &rep, &mut report.conflicts)?;
        follow(&mut report, &current, &rep);
        current = next;
    }

    Ok((current, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum LiveMatch {
    Matched { state: StateId, similarity: f64 },
    Unknown { best: StateId, similarity: f64 },
}

impl LiveMatch {
    pub fn state(&self) -> &StateId {
        match self {
            Self::Matched { state, .. } => state,
            Self::Unknown { best, .. } => best,
        }
    }

    pub fn similarity(&self) -> f64 {
        match self {
            Self::Matched { similarity, .. } | Self::Unknown { similarity, .. } => *similarity,
        }
    }

    pub fn is_matched(&self) -> bool {
        matches!(self, Self::Matched { .. })
    }
}

/// Maps an observed screen onto the most similar graph state. Ties go to
/// the lexicographically smallest state id.
pub fn map_live_state(g: &StgGraph, observed: &HierarchyNode) -> LiveMatch {
    map_live_state_with(g, observed, DEFAULT_THRESHOLD)
}

pub fn map_live_state_with(g: &StgGraph, observed: &HierarchyNode, threshold: f64) -> LiveMatch {
    let sig = signature(observed);
    let (best, score) = g
        .states()
        .iter()
        .map(|s| (&s.id, similarity(&sig, &state_signature(s))))
        .fold(None::<(&StateId, f64)>, |acc, (id, score)| match acc {
            Some((bid, bs)) if bs > score || (bs == score && bid < id) => Some((bid, bs)),
            _ => Some((id, score)),
        })
        .expect("a built graph has at least the entry state");
    if score >= threshold {
        LiveMatch::Matched { state: best.clone(), similarity: score }
    } else {
        LiveMatch::Unknown { best: best.clone(), similarity: score }
    }
}
