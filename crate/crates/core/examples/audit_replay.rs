//! Runs the scripted coding pass, saves the project, then rebuilds it from the
//! audit log alone and checks that both states agree.
//!
//! Run with `cargo run --example audit_replay`.

#[path = "funnel_replay.rs"]
#[allow(dead_code)]
mod funnel;

use groundwork::workflow::{load_project, save_project, Project};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let run = funnel::run_funnel()?;
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("project.json");
    save_project(&run.project, &path)?;
    let loaded = load_project(&path)?;

    let rebuilt = Project::rebuild(loaded.audit_log())?;
    println!("audit events: {}", loaded.audit_log().len());
    for event in loaded.audit_log().iter().take(5) {
        println!("  #{:<3} {:<16} {}", event.seq, event.stage.as_str(), event.detail);
    }
    println!("  ...");
    println!("rebuilt from log matches saved state: {}", rebuilt == loaded);

    // Replaying from a midpoint gives the same result.
    let midpoint = Project::rebuild(&loaded.audit_log()[..loaded.audit_log().len() / 2])?;
    let resumed = Project::replay(&midpoint, loaded.audit_log())?;
    println!("resumed from the midpoint matches: {}", resumed == loaded);
    Ok(())
}
