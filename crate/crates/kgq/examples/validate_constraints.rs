//! Check a dump against hand-built constraint specs and rank properties
//! by violation ratio.
//!
//! ```bash
//! cargo run --example validate_constraints
//! ```

use kgq::constraints::{
    build_closure, build_dump_index, validate_all, violation_ratio_table, ConstraintSpec,
    ConstraintStatus, RelationMode, RoleConfig,
};
use kgq::model::{Dump, IdentityMode, Statement};

fn main() {
    let mut dump = Dump::new("2024-04-01", IdentityMode::Content);
    dump.statements = vec![
        // A two-level taxonomy: novelists are writers are humans.
        Statement::new("t1", "Q36180", "P279", "Q5"),
        Statement::new("t2", "Q6625963", "P279", "Q36180"),
        Statement::new("t3", "Q42", "P31", "Q6625963"),
        Statement::new("t4", "Q913", "P31", "Q5"),
        // Occupation statements; Q99 has no typing at all.
        Statement::new("s1", "Q42", "P106", "Q36180"),
        Statement::new("s2", "Q913", "P106", "Q4964182"),
        Statement::new("s3", "Q99", "P106", "Q36180"),
        // One spouse pair is mirrored, the other is not.
        Statement::new("s4", "Q42", "P26", "Q14623675"),
        Statement::new("s5", "Q14623675", "P26", "Q42"),
        Statement::new("s6", "Q913", "P26", "Q40"),
    ];

    let specs = vec![
        ConstraintSpec::type_constraint(
            "P106",
            ["Q5"],
            RelationMode::InstanceOf,
            ConstraintStatus::Normal,
        ),
        ConstraintSpec::symmetric_constraint("P26", ConstraintStatus::Mandatory),
    ];

    let roles = RoleConfig::default();
    let closure = build_closure(&dump, &roles);
    let index = build_dump_index(&dump);
    let reports = validate_all(&specs, &dump, &closure, &index, None, 1);

    for report in &reports {
        println!(
            "{} {} ({}): {} correct, {} violating, ratio {:.1}",
            report.property,
            report.ctype,
            report.status,
            report.correct.len(),
            report.incorrect.len(),
            report.violation_ratio()
        );
    }

    let table = violation_ratio_table(&reports);
    println!("\nworst offenders:");
    for row in table.top_k(3) {
        println!(
            "  {} {} {}: {:.1}",
            row.property, row.ctype, row.status, row.violation_ratio
        );
    }
}
