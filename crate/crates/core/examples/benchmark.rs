//! Runs all four agents over the synthetic suite and prints a summary.
//!
//! ```text
//! cargo run --release --example benchmark -- [seeds] [budget]
//! ```

use hintwalk::bench::{run_suite, summarize, Agent};
use hintwalk::synth::fixture_suite;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let budget: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);

    let apps = fixture_suite();
    let seeds: Vec<u64> = (1..=seeds).collect();
    let rows = run_suite(&apps, &Agent::ALL, budget, &seeds)?;
    let summary = summarize(&rows, budget);

    println!("{:<8} {:>6} {:>10} {:>12} {:>10}", "agent", "runs", "completed", "mean steps", "coverage");
    for a in &summary.agents {
        println!("{:<8} {:>6} {:>10} {:>12.2} {:>10.3}", a.agent, a.runs, a.completed, a.mean_steps, a.mean_coverage);
    }
    for (agent, saving) in &summary.saving_vs {
        println!("guided saves {:.1}% vs {agent}", saving * 100.0);
    }
    println!("heuristic plans on: {:?}", summary.heuristic_apps);
    println!("dominance violations on exact plans: {}", summary.exact_violations.len());
    Ok(())
}
