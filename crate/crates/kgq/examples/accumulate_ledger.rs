//! Accumulate permanent removals over a three-dump sequence.
//!
//! A statement enters the ledger when some earlier dump carried it and the
//! newest dump does not, so reverted vandalism and short-lived statements
//! show up while everything still live stays out.
//!
//! ```bash
//! cargo run --example accumulate_ledger
//! ```

use kgq::diff::accumulate;
use kgq::model::{Dump, IdentityMode, Statement};

fn dump(label: &str, rows: &[(&str, &str, &str, &str)]) -> Dump {
    let mut dump = Dump::new(label, IdentityMode::Content);
    dump.statements = rows
        .iter()
        .map(|(id, s, p, o)| Statement::new(id, s, p, o))
        .collect();
    dump
}

fn main() {
    let january = dump(
        "2024-01-01",
        &[
            ("s1", "Q64", "P31", "Q515"),
            ("s2", "Q64", "P1082", "+3664088"),
            ("s3", "Q64", "P6", "Q2648"),
        ],
    );
    // February drops the mayor statement and updates the population.
    let february = dump(
        "2024-02-01",
        &[
            ("s1", "Q64", "P31", "Q515"),
            ("s4", "Q64", "P1082", "+3677472"),
        ],
    );
    // March briefly restores the mayor with a different statement id; the
    // content key matches, so the January statement is alive again.
    let march = dump(
        "2024-03-01",
        &[
            ("s1", "Q64", "P31", "Q515"),
            ("s4", "Q64", "P1082", "+3677472"),
            ("s9", "Q64", "P6", "Q2648"),
        ],
    );

    let ledger = accumulate(&[january, february, march]).expect("nonempty sequence");
    println!(
        "permanent removals as of {}: {}",
        ledger.as_of,
        ledger.entries.len()
    );
    for entry in ledger.entries.values() {
        println!(
            "  {} {} {} (removed in {})",
            entry.statement.subject,
            entry.statement.property,
            entry.statement.object.canonical(),
            entry.removed_at
        );
    }
}
