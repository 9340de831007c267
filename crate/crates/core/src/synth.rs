//! Synthetic app models for benchmarks and tests.
//!
//! Generated apps are built around a spanning tree of screens with a back
//! transition from every screen to its parent, so all screens are reachable
//! and the graph is strongly connected. On top of the tree the generator
//! adds tab rings among siblings, "home" shortcuts and long-press actions,
//! and fills screens with unbound decoy buttons and inert labels. Buttons
//! are identified by resource id, by text alone, or only by coordinates.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hierarchy::{Bounds, HierarchyNode};
use crate::sim::{AppModel, AppScreen, TransitionRule};
use crate::stg::{ActionKind, BACK_KEY_ID};

/// Seeds of the fixture suite, in order.
pub const SUITE_SEEDS: std::ops::Range<u64> = 1..21;

const ROW_HEIGHT: i32 = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IdStyle {
    Resource,
    Text,
    Coordinates,
}

struct Button {
    node: HierarchyNode,
    component_id: String,
}

struct ScreenBuilder {
    index: usize,
    rows: usize,
    items: Vec<HierarchyNode>,
}

impl ScreenBuilder {
    fn new(index: usize) -> Self {
        Self { index, rows: 0, items: Vec::new() }
    }

    fn next_bounds(&mut self) -> Bounds {
        let top = 300 + self.rows as i32 * ROW_HEIGHT;
        self.rows += 1;
        Bounds::new(40, top, 1040, top + ROW_HEIGHT - 20)
    }

    fn button(&mut self, label: &str, style: IdStyle) -> Button {
        let bounds = self.next_bounds();
        let i = self.index;
        let (node, component_id) = match style {
            IdStyle::Resource => {
                let id = format!("s{i}_{label}");
                (HierarchyNode::new("Button").with_id(id.clone()).with_text(label).with_bounds(bounds), id)
            }
            IdStyle::Text => {
                let text = format!("{label} ({i})");
                (HierarchyNode::new("Button").with_text(text.clone()).with_bounds(bounds), text)
            }
            IdStyle::Coordinates => {
                let id = format!("coord:{bounds}");
                (HierarchyNode::new("ImageButton").with_bounds(bounds), id)
            }
        };
        Button { node, component_id }
    }

    fn finish(self, title_id: String) -> HierarchyNode {
        let i = self.index;
        let title = HierarchyNode::new("TextView")
            .with_id(title_id)
            .with_bounds(Bounds::new(40, 120, 1040, 240))
            .not_clickable();
        let list = HierarchyNode::new("LinearLayout").with_id(format!("s{i}_content")).with_children(self.items);
        HierarchyNode::new("FrameLayout").with_id(format!("s{i}_root")).with_child(title).with_child(list)
    }
}

fn pick_style(rng: &mut ChaCha8Rng) -> IdStyle {
    match rng.gen_range(0..20) {
        0..=13 => IdStyle::Resource,
        14..=16 => IdStyle::Text,
        _ => IdStyle::Coordinates,
    }
}

/// Generates an app with `screens` screens (at least 2) from `seed`.
pub fn generate_app(seed: u64, screens: usize) -> AppModel {
    assert!(screens >= 2, "an app needs at least two screens");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = screens;

    // Spanning tree with a bias towards shallow, wide levels.
    let mut parent = vec![usize::MAX; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, slot) in parent.iter_mut().enumerate().skip(1) {
        let p = rng.gen_range(i.saturating_sub(6)..i);
        *slot = p;
        children[p].push(i);
    }

    // Forward edges before ids are assigned: (from, to, kind, label).
    let mut forward: Vec<Vec<(usize, ActionKind, String)>> = vec![Vec::new(); n];
    for (p, kids) in children.iter().enumerate() {
        for &c in kids {
            let kind = if rng.gen_bool(0.15) { ActionKind::LongPress } else { ActionKind::Click };
            forward[p].push((c, kind, format!("open{c}")));
        }
    }
    for kids in &children {
        if kids.len() >= 3 && rng.gen_bool(0.7) {
            for (k, &c) in kids.iter().enumerate() {
                let next = kids[(k + 1) % kids.len()];
                forward[c].push((next, ActionKind::Click, format!("tab{next}")));
            }
        }
    }
    for (i, edges) in forward.iter_mut().enumerate().skip(1) {
        if parent[i] != 0 && rng.gen_bool(0.25) {
            edges.push((0, ActionKind::Click, "home".to_string()));
        }
    }

    let activity_count = (n / 5).max(2);
    let mut models = Vec::with_capacity(n);
    let mut rules = Vec::new();
    for i in 0..n {
        let activity = if i == 0 { "MainActivity".to_string() } else { format!("Activity{}", rng.gen_range(1..activity_count)) };
        let mut builder = ScreenBuilder::new(i);
        let mut items = Vec::new();
        for (to, kind, label) in &forward[i] {
            let mut b = builder.button(label, pick_style(&mut rng));
            if *kind == ActionKind::LongPress {
                b.node = b.node.long_clickable();
            }
            rules.push(TransitionRule {
                screen_id: format!("S{i}"),
                component_id: b.component_id,
                action_kind: *kind,
                target: format!("S{to}"),
            });
            items.push(b.node);
        }
        for d in 0..rng.gen_range(1..=3) {
            let decoy = builder.button(&format!("decoy{d}"), IdStyle::Resource);
            items.push(decoy.node);
        }
        for l in 0..rng.gen_range(0..=2) {
            let bounds = builder.next_bounds();
            items.push(
                HierarchyNode::new("TextView").with_id(format!("s{i}_label{l}")).with_bounds(bounds).not_clickable(),
            );
        }
        items.shuffle(&mut rng);
        builder.items = items;
        let title_id = format!("s{i}_title");
        let dynamic = rng.gen_bool(0.5);
        models.push(AppScreen {
            screen_id: format!("S{i}"),
            activity,
            hierarchy: builder.finish(title_id.clone()),
            dynamic_text_slots: if dynamic { vec![title_id] } else { Vec::new() },
        });
        if i > 0 {
            rules.push(TransitionRule {
                screen_id: format!("S{i}"),
                component_id: BACK_KEY_ID.to_string(),
                action_kind: ActionKind::Back,
                target: format!("S{}", parent[i]),
            });
        }
    }

    let app = AppModel {
        name: format!("synth-{seed:02}"),
        screens: models,
        rules,
        entry: "S0".to_string(),
        content_seed: seed,
    };
    debug_assert!(app.validate().is_ok());
    app
}

/// The 20-app benchmark suite: 15 to 25 screens each, fixed seeds.
pub fn fixture_suite() -> Vec<AppModel> {
    SUITE_SEEDS
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            generate_app(seed, rng.gen_range(15..=25))
        })
        .collect()
}

fn labelled(id: &str, text: &str, top: i32) -> HierarchyNode {
    HierarchyNode::new("Button").with_id(id).with_text(text).with_bounds(Bounds::new(40, top, 1040, top + 130))
}

fn rows(id: &str, prefix: &str, count: usize) -> HierarchyNode {
    HierarchyNode::new("ListView").with_id(id).with_children((0..count).map(|k| {
        HierarchyNode::new("TextView")
            .with_id(format!("{prefix}_row"))
            .with_bounds(Bounds::new(40, 600 + k as i32 * 120, 1040, 700 + k as i32 * 120))
            .not_clickable()
    }))
}

/// A small bookkeeping app with eight screens in four activities.
pub fn money_tracker() -> AppModel {
    let screen = |id: &str, activity: &str, root: &str, kids: Vec<HierarchyNode>, slots: &[&str]| AppScreen {
        screen_id: id.to_string(),
        activity: activity.to_string(),
        hierarchy: HierarchyNode::new("FrameLayout").with_id(root).with_children(kids),
        dynamic_text_slots: slots.iter().map(|s| s.to_string()).collect(),
    };
    let screens = vec![
        screen(
            "home",
            "MainActivity",
            "home_root",
            vec![
                HierarchyNode::new("TextView").with_id("balance").not_clickable(),
                labelled("add_expense", "Add expense", 300),
                labelled("add_income", "Add income", 450),
                labelled("open_history", "History", 600),
                labelled("open_settings", "Settings", 750),
                HierarchyNode::new("ImageButton").with_bounds(Bounds::new(900, 60, 1040, 200)),
            ],
            &["balance"],
        ),
        screen(
            "expense",
            "EditActivity",
            "expense_root",
            vec![
                HierarchyNode::new("EditText").with_id("amount").with_bounds(Bounds::new(40, 300, 1040, 420)),
                labelled("pick_category", "Category", 450),
                labelled("save_expense", "Save", 600),
            ],
            &[],
        ),
        screen(
            "income",
            "EditActivity",
            "income_root",
            vec![
                HierarchyNode::new("EditText").with_id("income_amount").with_bounds(Bounds::new(40, 300, 1040, 420)),
                labelled("save_income", "Save", 450),
            ],
            &[],
        ),
        screen(
            "category",
            "EditActivity",
            "category_root",
            vec![
                rows("category_list", "category", 3),
                HierarchyNode::new("Button").with_text("New category").with_bounds(Bounds::new(40, 1200, 1040, 1330)),
            ],
            &[],
        ),
        screen(
            "history",
            "HistoryActivity",
            "history_root",
            vec![
                rows("history_list", "entry", 4),
                labelled("open_chart", "Chart", 300),
                labelled("history_filter", "Filter", 450).long_clickable(),
            ],
            &["entry_row"],
        ),
        screen(
            "chart",
            "HistoryActivity",
            "chart_root",
            vec![
                HierarchyNode::new("ImageView").with_id("chart_canvas").not_clickable(),
                labelled("chart_month", "Month", 300),
            ],
            &[],
        ),
        screen(
            "settings",
            "SettingsActivity",
            "settings_root",
            vec![
                labelled("currency", "Currency", 300),
                labelled("export", "Export", 450),
                labelled("about", "About", 600),
            ],
            &[],
        ),
        screen(
            "about",
            "SettingsActivity",
            "about_root",
            vec![HierarchyNode::new("TextView").with_id("version").not_clickable(), labelled("licenses", "Licenses", 300)],
            &["version"],
        ),
    ];
    let rule = |from: &str, comp: &str, kind: ActionKind, to: &str| TransitionRule {
        screen_id: from.to_string(),
        component_id: comp.to_string(),
        action_kind: kind,
        target: to.to_string(),
    };
    use ActionKind::{Back, Click, LongPress};
    let rules = vec![
        rule("home", "add_expense", Click, "expense"),
        rule("home", "add_income", Click, "income"),
        rule("home", "open_history", Click, "history"),
        rule("home", "open_settings", Click, "settings"),
        rule("expense", "pick_category", Click, "category"),
        rule("expense", "save_expense", Click, "home"),
        rule("expense", BACK_KEY_ID, Back, "home"),
        rule("income", "save_income", Click, "home"),
        rule("income", BACK_KEY_ID, Back, "home"),
        rule("category", "New category", Click, "expense"),
        rule("category", BACK_KEY_ID, Back, "expense"),
        rule("history", "open_chart", Click, "chart"),
        rule("history", "history_filter", LongPress, "history"),
        rule("history", BACK_KEY_ID, Back, "home"),
        rule("chart", "chart_month", Click, "history"),
        rule("chart", BACK_KEY_ID, Back, "history"),
        rule("settings", "about", Click, "about"),
        rule("settings", BACK_KEY_ID, Back, "home"),
        rule("about", BACK_KEY_ID, Back, "settings"),
    ];
    AppModel { name: "money-tracker".to_string(), screens, rules, entry: "home".to_string(), content_seed: 7 }
}
