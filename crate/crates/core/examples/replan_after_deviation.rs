//! A tester leaves the plan; the remaining walk is replanned from where they
//! ended up, skipping what they already saw.
//!
//! ```text
//! cargo run --example replan_after_deviation -- [app-seed]
//! ```

use std::collections::BTreeSet;

use hintwalk::planner::{plan_auto, PlannerConfig};
use hintwalk::synth::generate_app;
use hintwalk::StateId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let g = generate_app(seed, 12).to_stg()?;
    let cfg = PlannerConfig::default();
    let entry = g.entry().clone();

    let plan = plan_auto(&g, entry.as_str(), &BTreeSet::new(), &cfg)?;
    println!("initial plan: {} steps, walk {:?}", plan.total_steps, plan.walk);
    let hinted = &plan.edges[0];
    let here = g.index_of(entry.as_str()).unwrap();
    let Some(detour) = g.outgoing(here).find(|e| e.target != hinted.target && e.target != entry) else {
        println!("the entry offers no alternative to the hint");
        return Ok(());
    };
    println!("hint said {:?} on {}, tester used {} and reached {}", hinted.action_kind, hinted.component.id, detour.component.id, detour.target);

    let visited: BTreeSet<StateId> = [entry.clone(), detour.target.clone()].into();
    let rest = plan_auto(&g, detour.target.as_str(), &visited, &cfg)?;
    println!("replanned from {}: {} more steps, walk {:?}", rest.start, rest.total_steps, rest.walk);
    println!(
        "total with detour: {} steps vs {} planned",
        detour.weight as u64 + rest.total_steps,
        plan.total_steps
    );
    Ok(())
}
