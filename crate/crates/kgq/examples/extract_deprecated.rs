//! Pull deprecated-rank statements out of a dump and aggregate them.
//!
//! ```bash
//! cargo run --example extract_deprecated
//! ```

use kgq::deprecation::{aggregate_deprecated, extract_deprecated};
use kgq::model::{Dump, IdentityMode, Rank, Statement};

fn main() {
    let mut dump = Dump::new("2024-04-01", IdentityMode::Content);
    dump.statements = vec![
        Statement::new("s1", "Q1035", "P31", "Q5"),
        Statement::new("s2", "Q1035", "P569", "1809-02-12T00:00:00Z/11"),
        // A superseded birth date and a wrong occupation, both kept in the
        // graph but marked deprecated.
        Statement::new("s3", "Q1035", "P569", "1809-02-09T00:00:00Z/11")
            .with_rank(Rank::Deprecated),
        Statement::new("s4", "Q1035", "P106", "Q82955").with_rank(Rank::Deprecated),
        Statement::new("s5", "Q7259", "P31", "Q5"),
        Statement::new("s6", "Q7259", "P106", "Q82955").with_rank(Rank::Preferred),
    ];

    let deprecated = extract_deprecated(&dump);
    println!(
        "{} of {} statements deprecated in {}",
        deprecated.len(),
        dump.statements.len(),
        deprecated.source_dump
    );

    let aggregate = aggregate_deprecated(&deprecated, &dump.instance_index("P31"));
    println!("by property:");
    for (property, count) in &aggregate.by_property {
        println!("  {property}: {count}");
    }
    println!("by subject class:");
    for (class, count) in &aggregate.by_class {
        println!("  {class}: {count}");
    }
}
