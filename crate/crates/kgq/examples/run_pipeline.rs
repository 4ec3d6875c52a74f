//! Run every stage over the bundled two-dump fixture and list the bundle.
//!
//! The pipeline reads the dump sequence named by the config file, then
//! writes the removal ledger, update classifications, deprecated
//! statements, compiled constraint specs, validation reports, and the
//! combined low-quality sets into one fully deterministic directory.
//!
//! ```bash
//! cargo run --example run_pipeline
//! ```

use std::path::Path;

use kgq::config::read_config;
use kgq::pipeline::run_pipeline;

fn main() -> anyhow::Result<()> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/toy/run.cfg");
    let config = read_config(&fixture)?;

    let out = tempfile::tempdir()?;
    let report = run_pipeline(&config, out.path())?;

    println!(
        "{} dumps -> {} removals, {} deprecated, {} specs",
        report.dump_count, report.ledger_entries, report.deprecated_count, report.spec_count
    );
    println!(
        "{} live violations, {} fixed by removals, {} low-quality statements",
        report.live_violations, report.fixed_violations, report.low_quality
    );
    println!("\nbundle files:");
    for file in &report.files {
        println!("  {file}");
    }

    let summary = std::fs::read_to_string(out.path().join("report.txt"))?;
    println!("\nreport.txt:\n{summary}");
    Ok(())
}
