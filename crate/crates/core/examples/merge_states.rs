//! Collapses near-duplicate screens: a list whose rows changed text and a
//! screen seen twice under different dynamic content.
//!
//! ```text
//! cargo run --example merge_states -- [graph.json] [threshold]
//! ```

use hintwalk::merging::{merge_states_with, signature, similarity, MergeConfig};
use hintwalk::{format, HierarchyNode, ScreenState, StgGraph, TriggerAction};

fn history(rows: &[&str], with_filter: bool) -> HierarchyNode {
    let mut root = HierarchyNode::new("FrameLayout").with_id("history_root").with_child(
        HierarchyNode::new("ListView")
            .with_id("entries")
            .with_children(rows.iter().map(|t| HierarchyNode::new("TextView").with_id("entry_row").with_text(*t))),
    );
    root = root.with_child(HierarchyNode::new("Button").with_id("open_chart"));
    if with_filter {
        root = root.with_child(HierarchyNode::new("Button").with_id("filter"));
    }
    root
}

fn demo() -> Result<StgGraph, Box<dyn std::error::Error>> {
    let a = history(&["Coffee", "Taxi", "Rent"], false);
    let b = history(&["Books", "Gift", "Fuel"], false);
    let c = history(&["Books"], true);
    println!("sim(a, b) = {:.3}", similarity(&signature(&a), &signature(&b)));
    println!("sim(a, c) = {:.3}", similarity(&signature(&a), &signature(&c)));
    let home = HierarchyNode::new("FrameLayout").with_id("home_root").with_child(HierarchyNode::new("Button").with_id("history"));
    Ok(StgGraph::build(
        vec![
            ScreenState::new("home", "MainActivity", home),
            ScreenState::new("h1", "HistoryActivity", a),
            ScreenState::new("h2", "HistoryActivity", b),
            ScreenState::new("h3", "HistoryActivity", c),
        ],
        vec![
            TriggerAction::click("home", "h1", "history"),
            TriggerAction::click("h1", "h2", "refresh"),
            TriggerAction::click("h2", "h3", "refresh"),
            TriggerAction::click("h3", "home", "close"),
        ],
        "home",
    )?)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let g = match args.first() {
        Some(path) => format::read_file(path)?,
        None => demo()?,
    };
    let threshold = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(hintwalk::merging::DEFAULT_THRESHOLD);
    let (merged, report) = merge_states_with(&g, &MergeConfig::uniform(threshold))?;
    println!("{} states -> {} (pass 1: {}, pass 2: {})", g.len(), merged.len(), report.pass1_merges, report.pass2_merges);
    for (original, kept) in &report.canonical_of {
        if original != kept {
            println!("  {original} folded into {kept}");
        }
    }
    for c in &report.conflicts {
        println!("  conflict: {c:?}");
    }
    Ok(())
}
