//! Combining the three quality indicators.
//!
//! The community indicator (permanently removed statements), the
//! deprecation indicator, and the constraint indicator each produce a
//! statement-key set. This module re-validates the dump with removed
//! statements joined back in, takes the difference between the two
//! violation sets to find violations the removals fixed, tabulates how
//! much of the removed set violated each constraint class, and merges the
//! three indicator sets into one flagged low-quality set.
//!
//! Adding statements can fix one violation and create another, so the live
//! violation set is not a subset of the joined one; the only relation that
//! holds by construction is that the fixed set is disjoint from the live
//! violations.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::constraints::{
    build_closure, build_dump_index, join_set, validate_all, ConstraintSpec, ConstraintStatus,
    ConstraintType, RoleConfig, ViolationReport,
};
use crate::diff::RemovalLedger;
use crate::model::edge_io::{write_tsv, ModelError};
use crate::model::{Dump, Statement, StatementKey};

#[derive(Debug, thiserror::Error)]
pub enum CombineError {
    #[error("identity mode mismatch: dump uses {dump}, ledger uses {ledger}")]
    IdentityModeMismatch { dump: String, ledger: String },
    #[error("violation sets come from different configurations: {left} vs {right}")]
    ConfigMismatch { left: String, right: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The violating keys of one validation run, stamped with the
/// configuration they were computed under so mismatched runs cannot be
/// differenced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationSet {
    /// Label of the dump the run was based on.
    pub label: String,
    fingerprint: String,
    pub keys: BTreeSet<StatementKey>,
}

impl ViolationSet {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// One configuration stamp covering the base dump, its identity mode, and
/// the full spec list.
fn fingerprint(dump: &Dump, specs: &[ConstraintSpec]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(dump.label.as_bytes());
    hasher.update(b"\n");
    hasher.update(dump.identity_mode.to_string().as_bytes());
    hasher.update(b"\n");
    for spec in specs {
        hasher.update(
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                spec.property,
                spec.ctype,
                spec.status,
                spec.relation_mode,
                join_set(&spec.allowed_classes),
                spec.required_property,
                join_set(&spec.required_values),
                join_set(&spec.exceptions),
            )
            .as_bytes(),
        );
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn violating_keys(reports: &[ViolationReport]) -> BTreeSet<StatementKey> {
    reports
        .iter()
        .flat_map(|r| r.incorrect.iter().cloned())
        .collect()
}

/// Validate the dump and collect all violating keys.
pub fn violations(
    dump: &Dump,
    specs: &[ConstraintSpec],
    roles: &RoleConfig,
    workers: usize,
) -> (ViolationSet, Vec<ViolationReport>) {
    let closure = build_closure(dump, roles);
    let index = build_dump_index(dump);
    let reports = validate_all(specs, dump, &closure, &index, None, workers);
    let set = ViolationSet {
        label: dump.label.clone(),
        fingerprint: fingerprint(dump, specs),
        keys: violating_keys(&reports),
    };
    (set, reports)
}

/// Join the ledger's removed statements back into the dump. Key collisions
/// resolve in favor of the live statement.
pub fn join_removals(dump: &Dump, ledger: &RemovalLedger) -> Result<Dump, CombineError> {
    if dump.identity_mode != ledger.identity_mode {
        return Err(CombineError::IdentityModeMismatch {
            dump: dump.identity_mode.to_string(),
            ledger: ledger.identity_mode.to_string(),
        });
    }
    let live = dump.key_set();
    let mut joined = dump.clone();
    for (key, entry) in &ledger.entries {
        if !live.contains(key) {
            joined.statements.push(entry.statement.clone());
        }
    }
    Ok(joined)
}

/// Re-validate over the dump with removals joined back in. The result
/// carries the base dump's configuration stamp, so it can be differenced
/// against a plain `violations` run on the same dump and specs.
pub fn violations_with_removals(
    dump: &Dump,
    ledger: &RemovalLedger,
    specs: &[ConstraintSpec],
    roles: &RoleConfig,
    workers: usize,
) -> Result<(ViolationSet, Vec<ViolationReport>), CombineError> {
    let joined = join_removals(dump, ledger)?;
    let closure = build_closure(&joined, roles);
    let index = build_dump_index(&joined);
    let reports = validate_all(specs, &joined, &closure, &index, None, workers);
    let set = ViolationSet {
        label: dump.label.clone(),
        fingerprint: fingerprint(dump, specs),
        keys: violating_keys(&reports),
    };
    Ok((set, reports))
}

/// Violations present with the removals joined in but absent from the live
/// dump: the violations the removals fixed.
pub fn fixed_violations(
    live: &ViolationSet,
    with_removals: &ViolationSet,
) -> Result<BTreeSet<StatementKey>, CombineError> {
    if live.fingerprint != with_removals.fingerprint {
        return Err(CombineError::ConfigMismatch {
            left: live.label.clone(),
            right: with_removals.label.clone(),
        });
    }
    Ok(with_removals.keys.difference(&live.keys).cloned().collect())
}

/// How much of the removed set violates one constraint class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapRow {
    pub ctype: ConstraintType,
    pub status: ConstraintStatus,
    /// Removed statements violating a constraint of this class.
    pub violating: usize,
    /// Removed statements within scope of a constraint of this class.
    pub in_scope: usize,
}

impl OverlapRow {
    /// Render as `violating/in_scope (percentage)`; an empty scope has no
    /// meaningful percentage.
    pub fn render(&self) -> String {
        if self.in_scope == 0 {
            format!("{}/{} (\u{2014})", self.violating, self.in_scope)
        } else {
            format!(
                "{}/{} ({:.2}%)",
                self.violating,
                self.in_scope,
                100.0 * self.violating as f64 / self.in_scope as f64
            )
        }
    }
}

/// Tabulate, per constraint class, how many removed statements fall in
/// scope and how many of those violate. Reports must come from a
/// validation run whose dump includes the removed statements. Every
/// (ctype, status) pair named by the specs gets a row, even when empty.
pub fn overlap_table(
    removed: &BTreeSet<StatementKey>,
    specs: &[ConstraintSpec],
    reports: &[ViolationReport],
) -> Vec<OverlapRow> {
    let mut cells: BTreeMap<(ConstraintType, ConstraintStatus), (usize, usize)> = BTreeMap::new();
    for spec in specs {
        cells.entry((spec.ctype, spec.status)).or_default();
    }
    for report in reports {
        let cell = cells.entry((report.ctype, report.status)).or_default();
        // A key can appear under several sibling constraints; the table
        // counts statement/constraint-class pairs once each, so dedup
        // within the report, not across reports of one class.
        cell.0 += report
            .incorrect
            .iter()
            .filter(|k| removed.contains(*k))
            .count();
        cell.1 += report
            .correct
            .iter()
            .chain(report.incorrect.iter())
            .filter(|k| removed.contains(*k))
            .count();
    }
    cells
        .into_iter()
        .map(|((ctype, status), (violating, in_scope))| OverlapRow {
            ctype,
            status,
            violating,
            in_scope,
        })
        .collect()
}

/// Provenance of one low-quality statement key.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QualityFlags {
    pub community: bool,
    pub deprecated: bool,
    pub constraint: bool,
}

/// The three indicator sets plus the fixed-violation set of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndicatorResult {
    pub community: BTreeSet<StatementKey>,
    pub deprecated: BTreeSet<StatementKey>,
    pub violating: BTreeSet<StatementKey>,
    pub fixed: BTreeSet<StatementKey>,
}

impl IndicatorResult {
    /// Union of the three indicators with per-key provenance flags.
    pub fn low_quality(&self) -> BTreeMap<StatementKey, QualityFlags> {
        low_quality_union(&self.community, &self.deprecated, &self.violating)
    }
}

/// Merge the three indicator sets; a key carries one flag per set that
/// contains it.
pub fn low_quality_union(
    community: &BTreeSet<StatementKey>,
    deprecated: &BTreeSet<StatementKey>,
    violating: &BTreeSet<StatementKey>,
) -> BTreeMap<StatementKey, QualityFlags> {
    let mut union: BTreeMap<StatementKey, QualityFlags> = BTreeMap::new();
    for key in community {
        union.entry(key.clone()).or_default().community = true;
    }
    for key in deprecated {
        union.entry(key.clone()).or_default().deprecated = true;
    }
    for key in violating {
        union.entry(key.clone()).or_default().constraint = true;
    }
    union
}

/// Header of every statement payload file the toolkit writes.
pub const PAYLOAD_COLUMNS: [&str; 5] = ["id", "node1", "label", "node2", "rank"];

/// One output row for a statement, matching [`PAYLOAD_COLUMNS`].
pub fn payload_row(stmt: &Statement) -> Vec<String> {
    vec![
        stmt.id.clone(),
        stmt.subject.clone(),
        stmt.property.clone(),
        stmt.object.raw().to_string(),
        stmt.rank.to_string(),
    ]
}

/// Write a key set as an edge file, resolving payloads through the given
/// lookup. Keys without a payload are skipped; the caller's lookup is
/// expected to cover every key.
pub fn write_key_set(
    path: &Path,
    keys: &BTreeSet<StatementKey>,
    payloads: &BTreeMap<StatementKey, &Statement>,
) -> Result<(), CombineError> {
    let rows = keys
        .iter()
        .filter_map(|key| payloads.get(key))
        .map(|stmt| payload_row(stmt));
    write_tsv(path, &PAYLOAD_COLUMNS, rows)?;
    Ok(())
}

/// Write the overlap table.
pub fn write_overlap(path: &Path, rows: &[OverlapRow]) -> Result<(), CombineError> {
    let out = rows.iter().map(|row| {
        vec![
            row.ctype.to_string(),
            row.status.to_string(),
            row.violating.to_string(),
            row.in_scope.to_string(),
            row.render(),
        ]
    });
    write_tsv(
        path,
        &["ctype", "status", "violating", "in_scope", "fraction"],
        out,
    )?;
    Ok(())
}

/// Write the flagged low-quality set as an edge file with one 0/1 column
/// per indicator.
pub fn write_low_quality(
    path: &Path,
    union: &BTreeMap<StatementKey, QualityFlags>,
    payloads: &BTreeMap<StatementKey, &Statement>,
) -> Result<(), CombineError> {
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    let rows = union.iter().filter_map(|(key, flags)| {
        payloads.get(key).map(|stmt| {
            let mut row = payload_row(stmt);
            row.push(flag(flags.community));
            row.push(flag(flags.deprecated));
            row.push(flag(flags.constraint));
            row
        })
    });
    write_tsv(
        path,
        &[
            "id",
            "node1",
            "label",
            "node2",
            "rank",
            "community",
            "deprecated",
            "constraint",
        ],
        rows,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::accumulate;
    use crate::model::{IdentityMode, Rank};
    use proptest::prelude::*;

    fn dump_of(label: &str, rows: &[(&str, &str, &str, &str)]) -> Dump {
        let mut dump = Dump::new(label, IdentityMode::Content);
        for (id, s, p, o) in rows {
            dump.statements.push(Statement::new(id, s, p, o));
        }
        dump
    }

    fn human_type_spec() -> ConstraintSpec {
        ConstraintSpec::type_constraint(
            "P106",
            ["Q5"],
            crate::constraints::RelationMode::InstanceOf,
            ConstraintStatus::Normal,
        )
    }

    #[test]
    fn empty_ledger_changes_nothing() {
        let dump = dump_of(
            "d1",
            &[("X1", "Q1", "P106", "Q901"), ("I1", "Q1", "P31", "Q5")],
        );
        let ledger = accumulate(&[dump.clone()]).unwrap();
        let specs = [human_type_spec()];
        let roles = RoleConfig::default();
        let (live, _) = violations(&dump, &specs, &roles, 2);
        let (joined, _) = violations_with_removals(&dump, &ledger, &specs, &roles, 2).unwrap();
        assert_eq!(live.keys, joined.keys);
        assert!(fixed_violations(&live, &joined).unwrap().is_empty());
    }

    #[test]
    fn removed_violation_shows_up_only_with_removals() {
        // The bad typing statement was removed between the two dumps; the
        // live dump is clean, the joined run sees the violation.
        let old = dump_of(
            "d1",
            &[
                ("X1", "Q1", "P106", "Q901"),
                ("I1", "Q1", "P31", "Q5"),
                ("X2", "Q2", "P106", "Q902"),
            ],
        );
        let new = dump_of(
            "d2",
            &[("X1", "Q1", "P106", "Q901"), ("I1", "Q1", "P31", "Q5")],
        );
        let removed_key = Statement::new("X2", "Q2", "P106", "Q902").key(IdentityMode::Content);
        let ledger = accumulate(&[old, new.clone()]).unwrap();
        assert_eq!(ledger.len(), 1);

        let specs = [human_type_spec()];
        let roles = RoleConfig::default();
        let (live, _) = violations(&new, &specs, &roles, 2);
        let (joined, _) = violations_with_removals(&new, &ledger, &specs, &roles, 2).unwrap();
        assert!(!live.keys.contains(&removed_key));
        assert!(joined.keys.contains(&removed_key));
        let fixed = fixed_violations(&live, &joined).unwrap();
        assert_eq!(fixed.len(), 1);
        assert!(fixed.contains(&removed_key));
    }

    #[test]
    fn restored_symmetric_partner_can_fix_a_live_violation() {
        // The live dump holds one direction of a symmetric property; its
        // removed partner restores the pair, so the live violation is not
        // a violation in the joined run. The live set is therefore not a
        // subset of the joined set.
        let old = dump_of(
            "d1",
            &[("X1", "Q21", "P1706", "Q22"), ("X2", "Q22", "P1706", "Q21")],
        );
        let new = dump_of("d2", &[("X1", "Q21", "P1706", "Q22")]);
        let ledger = accumulate(&[old, new.clone()]).unwrap();
        let specs = [ConstraintSpec::symmetric_constraint(
            "P1706",
            ConstraintStatus::Normal,
        )];
        let roles = RoleConfig::default();
        let (live, _) = violations(&new, &specs, &roles, 2);
        let (joined, _) = violations_with_removals(&new, &ledger, &specs, &roles, 2).unwrap();
        assert_eq!(live.len(), 1);
        assert!(!live.keys.is_subset(&joined.keys));
        let fixed = fixed_violations(&live, &joined).unwrap();
        assert!(fixed.is_disjoint(&live.keys));
    }

    #[test]
    fn mismatched_configurations_cannot_be_differenced() {
        let dump = dump_of("d1", &[("X1", "Q1", "P106", "Q901")]);
        let roles = RoleConfig::default();
        let (a, _) = violations(&dump, &[human_type_spec()], &roles, 1);
        let (b, _) = violations(
            &dump,
            &[ConstraintSpec::symmetric_constraint(
                "P106",
                ConstraintStatus::Normal,
            )],
            &roles,
            1,
        );
        assert!(matches!(
            fixed_violations(&a, &b),
            Err(CombineError::ConfigMismatch { .. })
        ));
    }

    #[test]
    fn identity_modes_must_agree() {
        let dump = dump_of("d1", &[("X1", "Q1", "P106", "Q901")]);
        let mut id_dump = dump.clone();
        id_dump.identity_mode = IdentityMode::Id;
        let ledger = accumulate(&[id_dump.clone()]).unwrap();
        assert!(matches!(
            join_removals(&dump, &ledger),
            Err(CombineError::IdentityModeMismatch { .. })
        ));
    }

    #[test]
    fn overlap_counts_removed_statements_in_scope() {
        let spec = human_type_spec();
        let keyed: Vec<StatementKey> = (0..10)
            .map(|i| StatementKey::raw(format!("k{i}")))
            .collect();
        let report = ViolationReport {
            property: "P106".to_string(),
            ctype: ConstraintType::Type,
            status: ConstraintStatus::Normal,
            spec_tag: "type".to_string(),
            correct: keyed[3..10].to_vec(),
            incorrect: keyed[0..3].to_vec(),
        };
        let removed: BTreeSet<StatementKey> = keyed.iter().cloned().collect();
        let rows = overlap_table(&removed, &[spec], &[report]);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].violating, rows[0].in_scope), (3, 10));
        assert_eq!(rows[0].render(), "3/10 (30.00%)");
    }

    #[test]
    fn empty_scope_renders_a_dash() {
        let rows = overlap_table(&BTreeSet::new(), &[human_type_spec()], &[]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].render(), "0/0 (\u{2014})");
    }

    #[test]
    fn union_of_disjoint_sets_keeps_one_flag_each() {
        let keys = |range: std::ops::Range<usize>| -> BTreeSet<StatementKey> {
            range.map(|i| StatementKey::raw(format!("k{i}"))).collect()
        };
        let union = low_quality_union(&keys(0..2), &keys(2..5), &keys(5..9));
        assert_eq!(union.len(), 9);
        for flags in union.values() {
            let count = flags.community as u8 + flags.deprecated as u8 + flags.constraint as u8;
            assert_eq!(count, 1);
        }
    }

    #[test]
    fn shared_key_carries_all_three_flags() {
        let single: BTreeSet<StatementKey> = [StatementKey::raw("k")].into_iter().collect();
        let union = low_quality_union(&single, &single, &single);
        assert_eq!(union.len(), 1);
        let flags = union.values().next().unwrap();
        assert!(flags.community && flags.deprecated && flags.constraint);
    }

    #[test]
    fn low_quality_file_carries_payload_and_flags() {
        let dump = dump_of("d", &[("X1", "Q1", "P106", "Q901")]);
        let keyed = dump.keyed_statements();
        let key = keyed[0].0.clone();
        let payloads: BTreeMap<StatementKey, &Statement> = keyed.into_iter().collect();
        let union = low_quality_union(
            &[key.clone()].into_iter().collect(),
            &BTreeSet::new(),
            &[key].into_iter().collect(),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("low_quality.tsv");
        write_low_quality(&path, &union, &payloads).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "id\tnode1\tlabel\tnode2\trank\tcommunity\tdeprecated\tconstraint"
        );
        assert_eq!(lines.next().unwrap(), "X1\tQ1\tP106\tQ901\tnormal\t1\t0\t1");
    }

    #[test]
    fn indicator_result_invariant_holds() {
        let k = |s: &str| StatementKey::raw(s);
        let result = IndicatorResult {
            community: [k("a")].into_iter().collect(),
            deprecated: [k("b")].into_iter().collect(),
            violating: [k("c"), k("a")].into_iter().collect(),
            fixed: [k("d")].into_iter().collect(),
        };
        assert!(result.fixed.is_disjoint(&result.violating));
        let union = result.low_quality();
        assert_eq!(union.len(), 3);
        assert!(union[&k("a")].community && union[&k("a")].constraint);
    }

    #[test]
    fn deprecated_rank_survives_payload_rows() {
        let stmt = Statement::new("X1", "Q1", "P106", "Q901").with_rank(Rank::Deprecated);
        let row = payload_row(&stmt);
        assert_eq!(row[4], "deprecated");
    }

    proptest! {
        #[test]
        fn union_is_commutative_and_idempotent(
            a in proptest::collection::btree_set(0u8..30, 0..12),
            b in proptest::collection::btree_set(0u8..30, 0..12),
            c in proptest::collection::btree_set(0u8..30, 0..12),
        ) {
            let lift = |set: &BTreeSet<u8>| -> BTreeSet<StatementKey> {
                set.iter().map(|i| StatementKey::raw(format!("k{i}"))).collect()
            };
            let (a, b, c) = (lift(&a), lift(&b), lift(&c));
            let once = low_quality_union(&a, &b, &c);
            // Same keys whatever the argument order.
            let swapped = low_quality_union(&c, &a, &b);
            let keys: BTreeSet<_> = once.keys().cloned().collect();
            let swapped_keys: BTreeSet<_> = swapped.keys().cloned().collect();
            prop_assert_eq!(&keys, &swapped_keys);
            // Flags line up once roles are mapped back.
            for (key, flags) in &once {
                let other = swapped[key];
                prop_assert_eq!(flags.community, other.deprecated);
                prop_assert_eq!(flags.deprecated, other.constraint);
                prop_assert_eq!(flags.constraint, other.community);
            }
            // Feeding the union's keys back in reproduces the key set.
            let again = low_quality_union(&keys, &keys, &keys);
            let again_keys: BTreeSet<_> = again.keys().cloned().collect();
            prop_assert_eq!(keys, again_keys);
        }

        #[test]
        fn overlap_numerator_never_exceeds_denominator(
            correct in proptest::collection::btree_set(0u16..60, 0..20),
            incorrect in proptest::collection::btree_set(60u16..120, 0..20),
            removed in proptest::collection::btree_set(0u16..120, 0..40),
        ) {
            let lift = |i: &u16| StatementKey::raw(format!("k{i}"));
            let report = ViolationReport {
                property: "P1".to_string(),
                ctype: ConstraintType::Type,
                status: ConstraintStatus::Normal,
                spec_tag: "type".to_string(),
                correct: correct.iter().map(lift).collect(),
                incorrect: incorrect.iter().map(lift).collect(),
            };
            let removed: BTreeSet<StatementKey> = removed.iter().map(lift).collect();
            let rows = overlap_table(&removed, &[], &[report]);
            for row in rows {
                prop_assert!(row.violating <= row.in_scope);
            }
        }
    }
}
