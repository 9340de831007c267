//! Plans the cheapest walk that reaches every state of a graph and compares
//! it with the nearest-unvisited heuristic.
//!
//! ```text
//! cargo run --example plan_walk -- [graph.json] [start] [relaunch-cost]
//! ```
//! Without a graph the ground truth of the built-in bookkeeping app is used.

use std::collections::BTreeSet;

use hintwalk::planner::{plan_auto, plan_path_greedy, PlannerConfig};
use hintwalk::synth::money_tracker;
use hintwalk::format;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let g = match args.first() {
        Some(path) => format::read_file(path)?,
        None => money_tracker().to_stg()?,
    };
    let start = args.get(1).cloned().unwrap_or_else(|| g.entry().to_string());
    let mut cfg = PlannerConfig::default();
    if let Some(cost) = args.get(2) {
        cfg = cfg.with_relaunch(cost.parse()?);
    }

    let plan = plan_auto(&g, &start, &BTreeSet::new(), &cfg)?;
    println!("{:?} plan from {start}: {} steps over {} states", plan.strategy, plan.total_steps, plan.walk.len());
    for (k, e) in plan.edges.iter().enumerate() {
        println!("  {:>2}. {:<10} {:<10} {:<22} -> {}", k + 1, e.source, e.action_kind, e.component.id, e.target);
    }
    if !plan.uncoverable.is_empty() {
        println!("unreachable from {start}: {:?}", plan.uncoverable);
    }

    let greedy = plan_path_greedy(&g, &start, &BTreeSet::new(), &cfg)?;
    println!("nearest-unvisited heuristic needs {} steps", greedy.total_steps);
    println!("{}", serde_json::to_string_pretty(&plan.to_file())?);
    Ok(())
}
