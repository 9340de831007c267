//! Drives a guidance session against the simulated bookkeeping app: the
//! tester follows hints, wanders off once, lands on a screen the graph has
//! never seen, and still reaches full coverage.
//!
//! ```text
//! cargo run --example guided_session -- [log.ndjson]
//! ```

use hintwalk::guidance::{GuidanceSession, NextHint, Observation, SessionConfig};
use hintwalk::sim::AppSimulator;
use hintwalk::synth::money_tracker;
use hintwalk::{ActionKind, HierarchyNode, StateId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let app = money_tracker();
    let g = app.to_stg()?;
    let mut session = GuidanceSession::create(&g, &app.entry, SessionConfig::always_on())?;
    let mut sim = AppSimulator::new(&app);
    println!("plan: {} steps ({:?})", session.plan().total_steps, session.plan().strategy);

    let mut wandered = false;
    while let NextHint::Hint(hint) = session.next_hint() {
        // past the second step, ignore one hint for some other bound action
        let detour = (!wandered && session.steps_taken() >= 2)
            .then(|| {
                sim.available_actions().into_iter().find(|a| {
                    a.component.id != hint.component.id
                        && app.lookup(sim.screen_id(), &a.component.id, a.action_kind).is_some_and(|t| !session.visited_states().contains(&StateId::from(t)))
                })
            })
            .flatten();
        let (component, kind) = match detour {
            Some(a) => {
                wandered = true;
                (a.component.id, a.action_kind)
            }
            None => (hint.component.id.clone(), hint.action_kind),
        };
        sim.step(&component, kind);
        let obs = Observation::new(sim.activity(), sim.hierarchy().clone()).via(&component, kind);
        let u = session.apply_action(&obs);
        println!(
            "{:>2}. {:<13} {:<16} -> {:<10} deviated={:<5} replanned={}",
            session.steps_taken(),
            kind,
            component,
            u.matched,
            u.deviated,
            u.replanned
        );
        if session.steps_taken() == 5 {
            // a dialog the explorer never saw becomes a provisional state
            let dialog = HierarchyNode::new("FrameLayout").with_id("rate_dialog").with_child(HierarchyNode::new("Button").with_id("later"));
            let u = session.apply_action(&Observation::new("RateDialog", dialog).via("rate", ActionKind::Click));
            println!("    unknown screen -> {} (provisional={})", u.matched, u.provisional);
            sim.relaunch();
            let obs = Observation::new(sim.activity(), sim.hierarchy().clone()).via("relaunch", ActionKind::Relaunch);
            session.apply_action(&obs);
        }
    }
    let m = session.metrics();
    println!(
        "done in {} steps ({} repeats): state coverage {:.2}, activity coverage {:.2}",
        m.steps, m.repeats, m.state_coverage, m.activity_coverage
    );
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, session.event_log_ndjson())?;
        println!("event log written to {path}");
    }
    Ok(())
}
