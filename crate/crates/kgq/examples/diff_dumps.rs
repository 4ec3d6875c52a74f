//! Diff two in-memory dumps and print what appeared and what vanished.
//!
//! ```bash
//! cargo run --example diff_dumps
//! ```

use kgq::diff::pairwise_diff;
use kgq::model::{Dump, IdentityMode, Statement};

fn main() {
    let mut march = Dump::new("2024-03-01", IdentityMode::Content);
    march.statements = vec![
        Statement::new("s1", "Q42", "P31", "Q5"),
        Statement::new("s2", "Q42", "P106", "Q36180"),
        Statement::new("s3", "Q42", "P1559", "Douglas Adams"),
    ];

    let mut april = Dump::new("2024-04-01", IdentityMode::Content);
    april.statements = vec![
        Statement::new("s1", "Q42", "P31", "Q5"),
        // The occupation statement is gone; a birth date appeared.
        Statement::new("s3", "Q42", "P1559", "Douglas Adams"),
        Statement::new("s4", "Q42", "P569", "1952-03-11T00:00:00Z/11"),
    ];

    let diff = pairwise_diff(&march, &april).expect("same identity mode");
    println!("{} -> {}", diff.old_label, diff.new_label);
    for stmt in diff.added.values() {
        println!(
            "  + {} {} {}",
            stmt.subject,
            stmt.property,
            stmt.object.canonical()
        );
    }
    for stmt in diff.removed.values() {
        println!(
            "  - {} {} {}",
            stmt.subject,
            stmt.property,
            stmt.object.canonical()
        );
    }
}
