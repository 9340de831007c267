//! Extracts a merged graph from a simulated app by random exploration and
//! prints what was found.
//!
//! ```text
//! cargo run --example extract_app -- [app.json] [events] [seed] [out.json]
//! ```
//! Without arguments the built-in bookkeeping app is explored with 500
//! events from seed 7.

use hintwalk::extraction::{extract, ExplorationBudget};
use hintwalk::merging::MergeConfig;
use hintwalk::sim::AppModel;
use hintwalk::synth::money_tracker;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let app = match args.first() {
        Some(path) => AppModel::read_file(path)?,
        None => money_tracker(),
    };
    let events = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(500);
    let seed = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(7);

    let dynamic = hintwalk::extraction::dynamic_explore(&app, ExplorationBudget::new(events, seed))?;
    let combined = extract(&app, None, ExplorationBudget::new(events, seed), &MergeConfig::default())?;
    println!("{}: {} raw states, {} after merging", app.name, dynamic.len(), combined.graph.len());
    println!(
        "pass 1 merged {}, pass 2 merged {}, {} edge conflicts",
        combined.merge.pass1_merges,
        combined.merge.pass2_merges,
        combined.merge.conflicts.len()
    );
    for s in combined.graph.states() {
        let out = combined.graph.outgoing(combined.graph.index_of(s.id.as_str()).unwrap()).count();
        println!("  {:<24} {:<18} {out} outgoing", s.id, s.activity);
    }
    if let Some(out) = args.get(3) {
        hintwalk::format::write_file(&combined.graph, out)?;
        println!("wrote {out}");
    }
    Ok(())
}
