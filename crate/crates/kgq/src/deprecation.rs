//! Extraction and aggregation of deprecated-rank statements.
//!
//! Deprecation marks a statement as no longer valid without deleting it.
//! Extraction filters a dump down to its deprecated statements; aggregation
//! ranks the properties and subject classes they concentrate in.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Dump, Rank, Statement};

/// The deprecated-rank slice of one dump.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeprecatedSet {
    pub source_dump: String,
    pub statements: Vec<Statement>,
}

impl DeprecatedSet {
    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

/// Sentinel class for subjects without any typing statement.
pub const UNTYPED_CLASS: &str = "<untyped>";

/// Exactly the statements with deprecated rank, in dump order.
pub fn extract_deprecated(dump: &Dump) -> DeprecatedSet {
    DeprecatedSet {
        source_dump: dump.label.clone(),
        statements: dump
            .statements
            .iter()
            .filter(|s| s.rank == Rank::Deprecated)
            .cloned()
            .collect(),
    }
}

/// Count lists over a deprecated set, sorted descending, ties broken by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeprecationAggregate {
    /// (property, count); counts sum to the set size.
    pub by_property: Vec<(String, usize)>,
    /// (class, count); a statement counts once per class of its subject,
    /// so these counts can exceed the set size. Untyped subjects fall
    /// under [`UNTYPED_CLASS`].
    pub by_class: Vec<(String, usize)>,
}

fn sorted_counts(counts: BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut list: Vec<(String, usize)> = counts.into_iter().collect();
    list.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    list
}

/// Aggregate a deprecated set by property and by subject class.
/// `instance_index` maps subject to its classes (see
/// [`Dump::instance_index`]).
pub fn aggregate_deprecated(
    set: &DeprecatedSet,
    instance_index: &BTreeMap<String, BTreeSet<String>>,
) -> DeprecationAggregate {
    let mut by_property: BTreeMap<String, usize> = BTreeMap::new();
    let mut by_class: BTreeMap<String, usize> = BTreeMap::new();
    for stmt in &set.statements {
        *by_property.entry(stmt.property.clone()).or_insert(0) += 1;
        match instance_index.get(&stmt.subject) {
            Some(classes) if !classes.is_empty() => {
                for class in classes {
                    *by_class.entry(class.clone()).or_insert(0) += 1;
                }
            }
            _ => *by_class.entry(UNTYPED_CLASS.to_string()).or_insert(0) += 1,
        }
    }
    DeprecationAggregate {
        by_property: sorted_counts(by_property),
        by_class: sorted_counts(by_class),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IdentityMode;
    use proptest::prelude::*;

    fn dump_with_ranks(rows: &[(&str, &str, &str, &str, Rank)]) -> Dump {
        let mut dump = Dump::new("d", IdentityMode::Content);
        for (id, s, p, o, rank) in rows {
            dump.statements
                .push(Statement::new(id, s, p, o).with_rank(*rank));
        }
        dump
    }

    #[test]
    fn no_deprecated_statements_yields_empty_set() {
        let dump = dump_with_ranks(&[
            ("X1", "Q1", "P31", "Q5", Rank::Normal),
            ("X2", "Q2", "P31", "Q5", Rank::Preferred),
        ]);
        assert!(extract_deprecated(&dump).is_empty());
    }

    #[test]
    fn extracts_exactly_the_deprecated_ranks() {
        let dump = dump_with_ranks(&[
            ("X1", "Q1", "P31", "Q5", Rank::Normal),
            ("X2", "Q1", "P2215", "10", Rank::Deprecated),
            ("X3", "Q2", "P2215", "20", Rank::Deprecated),
            (
                "X4",
                "Q2",
                "P569",
                "1964-00-00T00:00:00Z/9",
                Rank::Preferred,
            ),
            ("X5", "Q3", "P2215", "30", Rank::Deprecated),
        ]);
        let set = extract_deprecated(&dump);
        assert_eq!(set.len(), 3);
        assert!(set.statements.iter().all(|s| s.rank == Rank::Deprecated));
        assert_eq!(set.source_dump, "d");
    }

    #[test]
    fn property_counts_rank_descending() {
        let dump = dump_with_ranks(&[
            ("X1", "Q1", "P2215", "1", Rank::Deprecated),
            ("X2", "Q2", "P2215", "2", Rank::Deprecated),
            ("X3", "Q3", "P2215", "3", Rank::Deprecated),
            ("X4", "Q4", "P31", "Q5", Rank::Deprecated),
        ]);
        let set = extract_deprecated(&dump);
        let agg = aggregate_deprecated(&set, &BTreeMap::new());
        assert_eq!(
            agg.by_property,
            vec![("P2215".to_string(), 3), ("P31".to_string(), 1)]
        );
    }

    #[test]
    fn class_attribution_is_per_class_with_untyped_sentinel() {
        let dump = dump_with_ranks(&[
            ("X1", "Q1", "P2215", "1", Rank::Deprecated),
            ("X2", "Q2", "P2215", "2", Rank::Deprecated),
        ]);
        let set = extract_deprecated(&dump);
        let mut index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        index.insert(
            "Q1".to_string(),
            ["Q5".to_string(), "Q6".to_string()].into_iter().collect(),
        );
        let agg = aggregate_deprecated(&set, &index);
        // Q1 counts under both its classes; Q2 has no typing statement.
        let classes: BTreeMap<&str, usize> =
            agg.by_class.iter().map(|(c, n)| (c.as_str(), *n)).collect();
        assert_eq!(classes["Q5"], 1);
        assert_eq!(classes["Q6"], 1);
        assert_eq!(classes[UNTYPED_CLASS], 1);
    }

    #[test]
    fn empty_set_aggregates_to_empty_lists() {
        let agg = aggregate_deprecated(&DeprecatedSet::default(), &BTreeMap::new());
        assert!(agg.by_property.is_empty());
        assert!(agg.by_class.is_empty());
    }

    proptest! {
        #[test]
        fn extraction_partitions_the_dump(
            ranks in proptest::collection::vec(0u8..3, 0..60),
        ) {
            let rows: Vec<(String, Rank)> = ranks
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let rank = match r {
                        0 => Rank::Preferred,
                        1 => Rank::Normal,
                        _ => Rank::Deprecated,
                    };
                    (format!("X{i}"), rank)
                })
                .collect();
            let mut dump = Dump::new("d", IdentityMode::Content);
            for (id, rank) in &rows {
                dump.statements.push(
                    Statement::new(id, "Q1", "P1", "v").with_rank(*rank),
                );
            }
            let deprecated = extract_deprecated(&dump);
            let complement: Vec<&Statement> = dump
                .statements
                .iter()
                .filter(|s| s.rank != Rank::Deprecated)
                .collect();
            prop_assert_eq!(
                deprecated.len() + complement.len(),
                dump.statements.len()
            );
            for stmt in &deprecated.statements {
                prop_assert_eq!(stmt.rank, Rank::Deprecated);
            }
            for stmt in complement {
                prop_assert!(stmt.rank != Rank::Deprecated);
            }
        }

        #[test]
        fn property_counts_sum_to_set_size(
            properties in proptest::collection::vec(0u8..5, 0..40),
        ) {
            let mut dump = Dump::new("d", IdentityMode::Content);
            for (i, p) in properties.iter().enumerate() {
                dump.statements.push(
                    Statement::new(&format!("X{i}"), &format!("Q{i}"), &format!("P{p}"), "v")
                        .with_rank(Rank::Deprecated),
                );
            }
            let set = extract_deprecated(&dump);
            let agg = aggregate_deprecated(&set, &BTreeMap::new());
            let total: usize = agg.by_property.iter().map(|(_, n)| n).sum();
            prop_assert_eq!(total, set.len());
        }
    }
}
