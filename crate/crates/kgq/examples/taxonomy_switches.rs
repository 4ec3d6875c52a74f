//! Track where removed typing statements went.
//!
//! When an instance-of statement disappears, the subject may have been
//! re-typed, moved to the class hierarchy, or dropped entirely. The switch
//! report counts each removed typing statement by the taxonomy properties
//! that gained statements for the same subject in the same interval.
//!
//! ```bash
//! cargo run --example taxonomy_switches
//! ```

use kgq::diff::accumulate_with_diffs;
use kgq::model::{Dump, IdentityMode, Statement};
use kgq::updates::{taxonomy_switch_report, SwitchTarget};

fn main() {
    let mut before = Dump::new("2024-01-01", IdentityMode::Content);
    before.statements = vec![
        Statement::new("s1", "Q55931", "P31", "Q16917"),
        Statement::new("s2", "Q9415", "P31", "Q60539481"),
        Statement::new("s3", "Q11173", "P279", "Q79529"),
    ];
    let mut after = Dump::new("2024-02-01", IdentityMode::Content);
    after.statements = vec![
        // Q55931 was re-typed under a different class.
        Statement::new("s4", "Q55931", "P31", "Q64578911"),
        // Q9415 stopped being an instance and became a subclass.
        Statement::new("s5", "Q9415", "P279", "Q60539481"),
        // Q11173 lost its subclass statement and got nothing back.
    ];

    let (ledger, diffs) = accumulate_with_diffs(&[before, after]).unwrap();
    let report = taxonomy_switch_report(&ledger, &diffs, "P31", "P279", 4);

    for ((from, target), count) in &report.counts {
        if *count == 0 {
            continue;
        }
        let examples = report
            .examples
            .get(&(from.clone(), *target))
            .map(|statements| {
                statements
                    .iter()
                    .map(|s| s.subject.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .unwrap_or_default();
        println!(
            "removed {from} -> {}: {count} ({examples})",
            report.target_label(*target)
        );
    }
    println!(
        "\nstraight instance-to-subclass moves: {}",
        report.count("P31", SwitchTarget::Subclass)
    );
}
