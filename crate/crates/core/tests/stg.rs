mod common;

use std::collections::HashSet;

use hintwalk::format::{from_json, read_file, to_json, write_file, FormatError};
use hintwalk::hierarchy::{Bounds, HierarchyNode};
use hintwalk::stg::{ActionKind, ComponentKind, ComponentRef, GraphError};
use hintwalk::{ScreenState, StateId, StgGraph, TriggerAction};
use proptest::prelude::*;

fn arb_hierarchy() -> impl Strategy<Value = HierarchyNode> {
    let leaf = (
        prop::sample::select(vec!["Button", "TextView", "ImageButton", "EditText"]),
        prop::option::of("[a-z]{1,6}"),
        prop::option::of("[A-Za-z ]{0,8}"),
        prop::option::of((0i32..500, 0i32..500)),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(ty, id, text, pos, clickable, long)| {
            let mut n = HierarchyNode::new(ty);
            n.resource_id = id;
            n.text = text;
            n.bounds = pos.map(|(x, y)| Bounds::new(x, y, x + 100, y + 50));
            n.clickable = clickable;
            n.long_clickable = long;
            n
        });
    leaf.prop_recursive(3, 16, 4, |inner| {
        (prop::collection::vec(inner, 1..4), prop::option::of("[a-z]{1,5}")).prop_map(|(kids, id)| {
            let mut n = HierarchyNode::new("LinearLayout").with_children(kids);
            n.resource_id = id;
            n
        })
    })
}

fn arb_component() -> impl Strategy<Value = ComponentRef> {
    prop_oneof![
        "[a-z_]{1,8}".prop_map(ComponentRef::resource),
        "[A-Za-z]{1,8}".prop_map(|t| ComponentRef {
            id: t.clone(),
            kind: ComponentKind::Text,
            bounds: None,
            display_text: Some(t),
        }),
        (0i32..900, 0i32..900).prop_map(|(x, y)| {
            let b = Bounds::new(x, y, x + 10, y + 10);
            ComponentRef { id: format!("coord:{b}"), kind: ComponentKind::Coordinates, bounds: Some(b), display_text: None }
        }),
    ]
}

fn arb_graph() -> impl Strategy<Value = StgGraph> {
    (1usize..8)
        .prop_flat_map(|n| {
            let states = prop::collection::vec((arb_hierarchy(), any::<bool>(), any::<bool>(), 0usize..3), n);
            let edges = prop::collection::vec(
                (0..n, 0..n, arb_component(), prop::sample::select(ActionKind::ALL.to_vec()), 1u32..5),
                0..16,
            );
            (states, edges, 0..n)
        })
        .prop_map(|(states, edges, entry)| {
            let states: Vec<ScreenState> = states
                .into_iter()
                .enumerate()
                .map(|(i, (h, placeholder, provisional, act))| {
                    let mut s = if placeholder {
                        ScreenState::placeholder(format!("S{i}"), format!("Act{act}"))
                    } else {
                        ScreenState::new(format!("S{i}"), format!("Act{act}"), h)
                    };
                    s.provisional = provisional;
                    s
                })
                .collect();
            let mut seen = HashSet::new();
            let mut actions = Vec::new();
            for (a, b, comp, kind, w) in edges {
                let b = if kind == ActionKind::Relaunch { entry } else { b };
                if seen.insert((a, comp.id.clone(), kind)) {
                    actions.push(TriggerAction::new(format!("S{a}"), format!("S{b}"), comp, kind).with_weight(w));
                }
            }
            StgGraph::build(states, actions, format!("S{entry}")).expect("strategy yields valid graphs")
        })
}

/// Independent statement of which (states, actions, entry) inputs are valid.
fn valid(states: &[ScreenState], actions: &[TriggerAction], entry: &str) -> bool {
    let ids: Vec<&str> = states.iter().map(|s| s.id.as_str()).collect();
    let unique: HashSet<&str> = ids.iter().copied().collect();
    if ids.iter().any(|i| i.is_empty()) || unique.len() != ids.len() || !unique.contains(entry) {
        return false;
    }
    let mut keys = HashSet::new();
    actions.iter().all(|a| {
        unique.contains(a.source.as_str())
            && unique.contains(a.target.as_str())
            && !a.component.id.is_empty()
            && (a.component.kind != ComponentKind::Coordinates || a.component.bounds.is_some())
            && a.weight > 0
            && (a.action_kind != ActionKind::Relaunch || a.target.as_str() == entry)
            && keys.insert((a.source.clone(), a.component.id.clone(), a.action_kind))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn json_round_trip_is_identity(g in arb_graph()) {
        let text = to_json(&g);
        let back = from_json(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(to_json(&back), text);
    }

    #[test]
    fn build_accepts_exactly_the_valid_inputs(
        ids in prop::collection::vec(prop::sample::select(vec!["", "a", "b", "c", "d"]), 0..5),
        edges in prop::collection::vec(
            (
                prop::sample::select(vec!["a", "b", "c", "z"]),
                prop::sample::select(vec!["a", "b", "c", "z"]),
                prop::sample::select(vec!["", "x", "y"]),
                prop::sample::select(ActionKind::ALL.to_vec()),
                0u32..3,
                any::<bool>(),
            ),
            0..6,
        ),
        entry in prop::sample::select(vec!["a", "b", "q"]),
    ) {
        let states: Vec<ScreenState> = ids.iter().map(|i| ScreenState::placeholder(*i, "Act")).collect();
        let actions: Vec<TriggerAction> = edges
            .into_iter()
            .map(|(s, t, c, k, w, coord)| {
                let mut comp = ComponentRef::resource(c);
                if coord {
                    comp.kind = ComponentKind::Coordinates;
                }
                TriggerAction::new(s, t, comp, k).with_weight(w)
            })
            .collect();
        let expected = valid(&states, &actions, entry);
        let got = StgGraph::build(states, actions, entry);
        prop_assert_eq!(got.is_ok(), expected, "{:?}", got.err());
    }

    #[test]
    fn adding_edges_never_shrinks_reachability(g in arb_graph(), a in 0usize..8, b in 0usize..8) {
        let n = g.len();
        let (a, b) = (a % n, b % n);
        let before: Vec<_> = (0..n).map(|i| g.reachable_mask(i)).collect();
        let (states, mut actions, entry) = g.into_parts();
        actions.push(TriggerAction::click(states[a].id.clone(), states[b].id.clone(), "__extra__"));
        let bigger = StgGraph::build(states, actions, entry).unwrap();
        for (i, old) in before.iter().enumerate() {
            let new = bigger.reachable_mask(i);
            prop_assert!(old.iter().zip(&new).all(|(o, n)| !o || *n));
            prop_assert!(new[i]);
        }
    }
}

#[test]
fn build_reports_the_first_problem() {
    let s = |i: &str| ScreenState::placeholder(i, "Act");
    assert_eq!(
        StgGraph::build(vec![s("a"), s("a")], vec![], "a").unwrap_err(),
        GraphError::DuplicateState(StateId::from("a"))
    );
    assert_eq!(StgGraph::build(vec![s("a")], vec![], "b").unwrap_err(), GraphError::MissingEntry("b".into()));
    let twice = vec![TriggerAction::click("a", "a", "x"), TriggerAction::click("a", "b", "x")];
    assert!(matches!(
        StgGraph::build(vec![s("a"), s("b")], twice, "a"),
        Err(GraphError::NonDeterministic { .. })
    ));
}

#[test]
fn file_round_trip_and_truncation() {
    let mut r = common::rng(3);
    let g = common::random_graph(&mut r, 6, 0.3, 2, true);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    write_file(&g, &path).unwrap();
    assert_eq!(read_file(&path).unwrap(), g);

    let text = std::fs::read_to_string(&path).unwrap();
    let cut = &text[..text.find("\"actions\"").unwrap() + 20];
    match from_json(cut) {
        Err(FormatError::Truncated { section, .. }) => assert_eq!(section, "actions"),
        other => panic!("expected truncation, got {other:?}"),
    }
}
