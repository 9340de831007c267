//! Writes the synthetic benchmark suite and the bookkeeping app as JSON
//! app models.
//!
//! ```text
//! cargo run --example generate_fixtures -- tests/fixtures/apps
//! ```

use std::path::PathBuf;

use hintwalk::synth::{fixture_suite, money_tracker};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/apps".into()));
    std::fs::create_dir_all(&dir)?;
    for app in fixture_suite() {
        let path = dir.join(format!("{}.json", app.name));
        std::fs::write(&path, app.to_json())?;
        println!("{} ({} screens, {} rules)", path.display(), app.screens.len(), app.rules.len());
    }
    let parent = dir.parent().map(PathBuf::from).unwrap_or_default();
    let tracker = parent.join("money_tracker.json");
    std::fs::write(&tracker, money_tracker().to_json())?;
    println!("{}", tracker.display());
    Ok(())
}
