//! Builds a small state graph by hand, shows how components are identified
//! and round-trips the graph through its file format.
//!
//! ```text
//! cargo run --example build_graph -- [out.json]
//! ```

use hintwalk::extraction::resolve_component_id;
use hintwalk::stg::{ActionKind, ComponentRef};
use hintwalk::{format, Bounds, HierarchyNode, ScreenState, StgGraph, TriggerAction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let menu = HierarchyNode::new("ImageButton").with_bounds(Bounds::new(960, 40, 1060, 140));
    let login = HierarchyNode::new("LinearLayout").with_id("login_root").with_children([
        HierarchyNode::new("EditText").with_id("user").with_bounds(Bounds::new(40, 200, 1040, 320)),
        HierarchyNode::new("Button").with_text("Sign in").with_bounds(Bounds::new(40, 400, 1040, 520)),
        menu.clone(),
    ]);
    // resource id, then text, then coordinates
    for leaf in login.executable_leaves() {
        let c = resolve_component_id(leaf);
        println!("{:<10} -> {:<28} ({:?})", leaf.component_type, c.id, c.kind);
    }

    let home = HierarchyNode::new("FrameLayout").with_id("home_root").with_child(
        HierarchyNode::new("Button").with_id("profile").with_bounds(Bounds::new(40, 200, 1040, 320)).long_clickable(),
    );
    let states = vec![
        ScreenState::new("login", "LoginActivity", login),
        ScreenState::new("home", "MainActivity", home),
        ScreenState::placeholder("about", "AboutActivity"),
    ];
    let actions = vec![
        TriggerAction::new("login", "home", resolve_component_id(&HierarchyNode::new("Button").with_text("Sign in")), ActionKind::Click),
        TriggerAction::new("login", "about", resolve_component_id(&menu), ActionKind::Click),
        TriggerAction::new("home", "about", ComponentRef::resource("profile"), ActionKind::LongPress),
        TriggerAction::new("about", "home", ComponentRef::back_key(), ActionKind::Back),
    ];
    let g = StgGraph::build(states, actions, "login")?;
    println!("{} states, {} actions, activities {:?}", g.len(), g.actions().len(), g.activities());
    println!("reachable from login: {:?}", g.reachable_from("login")?);

    // two actions with the same trigger on one screen are rejected
    let (states, mut actions, entry) = g.clone().into_parts();
    actions.push(TriggerAction::new("home", "login", ComponentRef::resource("profile"), ActionKind::LongPress));
    println!("duplicate trigger: {}", StgGraph::build(states, actions, entry).unwrap_err());

    let text = format::to_json(&g);
    assert_eq!(format::from_json(&text)?, g);
    if let Some(out) = std::env::args().nth(1) {
        format::write_file(&g, &out)?;
        println!("wrote {out}");
    } else {
        println!("{} bytes of JSON round-trip unchanged", text.len());
    }
    Ok(())
}
