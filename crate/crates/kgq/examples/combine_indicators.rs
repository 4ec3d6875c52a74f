//! Join the three quality indicators over one dump pair.
//!
//! Community removals come from the ledger, deprecated statements from
//! the live dump's ranks, and constraint violations from validation.
//! Re-validating with removals restored splits violations into still-live
//! and fixed-by-removal.
//!
//! ```bash
//! cargo run --example combine_indicators
//! ```

use std::collections::BTreeSet;

use kgq::combine::{fixed_violations, violations, violations_with_removals, IndicatorResult};
use kgq::constraints::{ConstraintSpec, ConstraintStatus, RelationMode, RoleConfig};
use kgq::deprecation::extract_deprecated;
use kgq::diff::accumulate_with_diffs;
use kgq::model::{Dump, IdentityMode, Rank, Statement};
use kgq::updates::{classify_removals, Thresholds};

fn main() {
    let mut before = Dump::new("2024-01-01", IdentityMode::Content);
    before.statements = vec![
        Statement::new("s1", "Q1", "P31", "Q5"),
        Statement::new("s2", "Q2", "P31", "Q5"),
        Statement::new("s3", "Q1", "P106", "Q901"),
        Statement::new("s4", "Q2", "P106", "Q902"),
        // This statement's subject was never typed; its removal fixed a
        // violation.
        Statement::new("s5", "Q3", "P106", "Q903"),
    ];
    let mut after = Dump::new("2024-02-01", IdentityMode::Content);
    after.statements = vec![
        Statement::new("s1", "Q1", "P31", "Q5"),
        // Q2 lost its typing, so s4 violates now.
        Statement::new("s3", "Q1", "P106", "Q901"),
        Statement::new("s4", "Q2", "P106", "Q902"),
        // A deprecated claim still in the dump.
        Statement::new("s6", "Q1", "P106", "Q904").with_rank(Rank::Deprecated),
    ];

    let specs = vec![ConstraintSpec::type_constraint(
        "P106",
        ["Q5"],
        RelationMode::InstanceOf,
        ConstraintStatus::Normal,
    )];
    let roles = RoleConfig::default();

    let (ledger, diffs) = accumulate_with_diffs(&[before, after.clone()]).unwrap();
    let classification = classify_removals(&ledger, &diffs, &Thresholds::default(), 16);
    let deprecated = extract_deprecated(&after);
    let (live, _) = violations(&after, &specs, &roles, 1);
    let (restored, _) = violations_with_removals(&after, &ledger, &specs, &roles, 1).unwrap();
    let fixed = fixed_violations(&live, &restored).unwrap();

    let result = IndicatorResult {
        community: classification.low_quality_keys(),
        deprecated: deprecated
            .statements
            .iter()
            .map(|s| s.key(after.identity_mode))
            .collect::<BTreeSet<_>>(),
        violating: live.keys.clone(),
        fixed,
    };

    println!("community removals: {}", result.community.len());
    println!("deprecated:         {}", result.deprecated.len());
    println!("live violations:    {}", result.violating.len());
    println!("fixed by removal:   {}", result.fixed.len());

    let union = result.low_quality();
    println!("\nlow-quality union ({} statements):", union.len());
    for (key, flags) in &union {
        let mut sources = Vec::new();
        if flags.community {
            sources.push("community");
        }
        if flags.deprecated {
            sources.push("deprecated");
        }
        if flags.constraint {
            sources.push("constraint");
        }
        println!("  {key} [{}]", sources.join(", "));
    }
}
