//! Separate true removals from edits that merely reworded a value.
//!
//! Each ledger entry is matched against statements added in the same
//! interval with the same subject and property. A close match in edit
//! distance, date delta, or quantity delta marks the removal as an
//! equivalent update rather than a quality signal.
//!
//! ```bash
//! cargo run --example classify_updates
//! ```

use kgq::diff::accumulate_with_diffs;
use kgq::model::{Dump, IdentityMode, Statement};
use kgq::updates::{classify_removals, Thresholds};

fn main() {
    let mut before = Dump::new("2024-01-01", IdentityMode::Content);
    before.statements = vec![
        Statement::new("s1", "Q913", "P1559", "Sokrates"),
        Statement::new("s2", "Q913", "P1082", "+1000"),
        Statement::new("s3", "Q913", "P106", "Q4964182"),
    ];
    let mut after = Dump::new("2024-02-01", IdentityMode::Content);
    after.statements = vec![
        // One-letter spelling fix and a tiny numeric correction.
        Statement::new("s4", "Q913", "P1559", "Socrates"),
        Statement::new("s5", "Q913", "P1082", "+1001"),
        // The occupation statement is gone for good.
    ];

    let (ledger, diffs) = accumulate_with_diffs(&[before, after]).expect("nonempty sequence");
    let report = classify_removals(&ledger, &diffs, &Thresholds::default(), 16);

    for (_, c) in &report.classifications {
        println!(
            "{} {} {} -> {} ({:?})",
            c.removed.subject,
            c.removed.property,
            c.removed.object.canonical(),
            c.replacement
                .as_ref()
                .map(|v| v.canonical().to_string())
                .unwrap_or_else(|| "gone".to_string()),
            c.category,
        );
    }

    println!("\nper value kind:");
    for (kind, stats) in &report.kind_stats {
        println!(
            "  {kind}: {} removed, {} matched, update fraction {:.2}",
            stats.removed,
            stats.matched,
            stats.update_fraction()
        );
    }
    println!(
        "\nlow-quality candidates after filtering equivalents: {}",
        report.low_quality_keys().len()
    );
}
