//! Compile property-constraint declarations into validator specs.
//!
//! Constraint declarations live in the graph itself: statements on the
//! property, qualified with allowed classes, required companions,
//! exceptions, and a status. This example ingests three declarations and
//! prints the resulting spec table.
//!
//! ```bash
//! cargo run --example compile_constraints
//! ```

use kgq::constraints::{ingest_constraints, RoleConfig};
use kgq::model::{Dump, IdentityMode, Statement};

fn main() {
    let mut dump = Dump::new("declarations", IdentityMode::Content);
    dump.statements = vec![
        // Occupation subjects must be instances of human, except one bot
        // account that is grandfathered in.
        Statement::new("d1", "P106", "P2302", "Q21503250")
            .with_qualifier("P2308", "Q5")
            .with_qualifier("P2309", "Q21503252")
            .with_qualifier("P2303", "Q4115189"),
        // Spouse is symmetric, and violations are mandatory to fix.
        Statement::new("d2", "P26", "P2302", "Q21510862").with_qualifier("P2316", "Q21502408"),
        // Anyone with a death date needs a birth date.
        Statement::new("d3", "P570", "P2302", "Q21503247").with_qualifier("P2306", "P569"),
        // Declarations on external-identifier properties are skipped.
        Statement::new("d4", "P213", "P2302", "Q21503250").with_qualifier("P2308", "Q5"),
        Statement::new("d5", "P213", "datatype", "external-id"),
    ];

    let report = ingest_constraints(&dump, &RoleConfig::default());
    println!("{} specs compiled", report.specs.len());
    for spec in &report.specs {
        println!(
            "  {} {} status={} allowed={:?} requires={}",
            spec.property,
            spec.ctype,
            spec.status,
            spec.allowed_classes,
            if spec.required_property.is_empty() {
                "-"
            } else {
                &spec.required_property
            },
        );
    }
    println!(
        "skipped: {} external-id, {} unsupported",
        report.skipped_external_id, report.skipped_unsupported
    );
}
