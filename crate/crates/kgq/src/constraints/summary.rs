//! Aggregation of violation reports into status-stratified summaries and
//! ranked per-property violation-ratio tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::model::edge_io::write_tsv;
use crate::model::{Dump, Statement, StatementKey};

use super::validate::ViolationReport;
use super::{ConstraintError, ConstraintStatus, ConstraintType};

/// Correct/incorrect totals for one (constraint type, status) cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SummaryRow {
    pub ctype: ConstraintType,
    pub status: ConstraintStatus,
    pub correct: usize,
    pub incorrect: usize,
}

/// Violation ratio of one property under one constraint type and status,
/// with sibling constraints of the same shape summed.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedRow {
    pub property: String,
    pub ctype: ConstraintType,
    pub status: ConstraintStatus,
    pub correct: usize,
    pub incorrect: usize,
    pub violation_ratio: f64,
}

fn ratio(correct: usize, incorrect: usize) -> f64 {
    let total = correct + incorrect;
    if total == 0 {
        0.0
    } else {
        100.0 * incorrect as f64 / total as f64
    }
}

impl SummaryRow {
    pub fn violation_ratio(&self) -> f64 {
        ratio(self.correct, self.incorrect)
    }
}

/// Status-stratified totals plus the descending violation-ratio ranking.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    pub ranked: Vec<RankedRow>,
}

impl SummaryTable {
    /// The k most violated (property, constraint, status) rows.
    pub fn top_k(&self, k: usize) -> &[RankedRow] {
        &self.ranked[..k.min(self.ranked.len())]
    }

    /// Write the (constraint type, status) totals table.
    pub fn write_summary(&self, path: &Path) -> Result<(), ConstraintError> {
        let rows = self.rows.iter().map(|row| {
            vec![
                row.ctype.to_string(),
                row.status.to_string(),
                row.correct.to_string(),
                row.incorrect.to_string(),
                format!("{:.4}", row.violation_ratio()),
            ]
        });
        write_tsv(
            path,
            &["ctype", "status", "correct", "incorrect", "violation_ratio"],
            rows,
        )?;
        Ok(())
    }

    /// Write the descending per-property violation-ratio ranking.
    pub fn write_ranked(&self, path: &Path) -> Result<(), ConstraintError> {
        let rows = self.ranked.iter().map(|row| {
            vec![
                row.property.clone(),
                row.ctype.to_string(),
                row.status.to_string(),
                row.correct.to_string(),
                row.incorrect.to_string(),
                format!("{:.4}", row.violation_ratio),
            ]
        });
        write_tsv(
            path,
            &[
                "property",
                "ctype",
                "status",
                "correct",
                "incorrect",
                "violation_ratio",
            ],
            rows,
        )?;
        Ok(())
    }
}

/// Aggregate reports into per-(ctype, status) totals and a ranking of
/// properties by violation ratio, descending, ties broken by name.
pub fn violation_ratio_table(reports: &[ViolationReport]) -> SummaryTable {
    let mut cells: BTreeMap<(ConstraintType, ConstraintStatus), (usize, usize)> = BTreeMap::new();
    let mut per_property: BTreeMap<(&str, ConstraintType, ConstraintStatus), (usize, usize)> =
        BTreeMap::new();
    for report in reports {
        let cell = cells.entry((report.ctype, report.status)).or_default();
        cell.0 += report.correct.len();
        cell.1 += report.incorrect.len();
        let prop = per_property
            .entry((report.property.as_str(), report.ctype, report.status))
            .or_default();
        prop.0 += report.correct.len();
        prop.1 += report.incorrect.len();
    }

    let rows = cells
        .into_iter()
        .map(|((ctype, status), (correct, incorrect))| SummaryRow {
            ctype,
            status,
            correct,
            incorrect,
        })
        .collect();

    let mut ranked: Vec<RankedRow> = per_property
        .into_iter()
        .map(
            |((property, ctype, status), (correct, incorrect))| RankedRow {
                property: property.to_string(),
                ctype,
                status,
                correct,
                incorrect,
                violation_ratio: ratio(correct, incorrect),
            },
        )
        .collect();
    // Ratios are finite percentages, never NaN, so total order is safe.
    ranked.sort_by(|a, b| {
        b.violation_ratio
            .partial_cmp(&a.violation_ratio)
            .expect("finite ratio")
            .then_with(|| (&a.property, a.ctype, a.status).cmp(&(&b.property, b.ctype, b.status)))
    });
    SummaryTable { rows, ranked }
}

/// Write per-property correct/incorrect statement files for every report,
/// named `P31.correct.tsv` style. Sibling constraints of one property share
/// the pair of files; the ctype, status, and tag columns tell rows apart.
/// Returns the written paths.
pub fn write_report_files(
    dir: &Path,
    reports: &[ViolationReport],
    dump: &Dump,
) -> Result<Vec<PathBuf>, ConstraintError> {
    let by_key: BTreeMap<StatementKey, &Statement> = dump.keyed_statements().into_iter().collect();

    let mut by_property: BTreeMap<&str, Vec<&ViolationReport>> = BTreeMap::new();
    for report in reports {
        by_property
            .entry(report.property.as_str())
            .or_default()
            .push(report);
    }

    let header = [
        "id", "node1", "label", "node2", "rank", "ctype", "status", "tag",
    ];
    let mut written = Vec::new();
    for (property, reports) in by_property {
        for suffix in ["correct", "incorrect"] {
            let mut rows: Vec<Vec<String>> = Vec::new();
            for report in &reports {
                let keys = if suffix == "correct" {
                    &report.correct
                } else {
                    &report.incorrect
                };
                for key in keys {
                    let stmt = by_key
                        .get(key)
                        .expect("report keys come from the validated dump");
                    rows.push(vec![
                        stmt.id.clone(),
                        stmt.subject.clone(),
                        stmt.property.clone(),
                        stmt.object.raw().to_string(),
                        stmt.rank.to_string(),
                        report.ctype.to_string(),
                        report.status.to_string(),
                        report.spec_tag.clone(),
                    ]);
                }
            }
            let path = dir.join(format!("{property}.{suffix}.tsv"));
            write_tsv(&path, &header, rows)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IdentityMode;

    fn report(
        property: &str,
        ctype: ConstraintType,
        status: ConstraintStatus,
        correct: usize,
        incorrect: usize,
    ) -> ViolationReport {
        ViolationReport {
            property: property.to_string(),
            ctype,
            status,
            spec_tag: ctype.to_string(),
            correct: (0..correct)
                .map(|i| StatementKey::raw(format!("{property}-c{i}")))
                .collect(),
            incorrect: (0..incorrect)
                .map(|i| StatementKey::raw(format!("{property}-i{i}")))
                .collect(),
        }
    }

    #[test]
    fn single_report_arithmetic() {
        let table = violation_ratio_table(&[report(
            "P106",
            ConstraintType::Type,
            ConstraintStatus::Normal,
            3,
            1,
        )]);
        assert_eq!(table.rows.len(), 1);
        assert!((table.rows[0].violation_ratio() - 25.0).abs() < 1e-9);
        assert_eq!(table.ranked.len(), 1);
        assert!((table.ranked[0].violation_ratio - 25.0).abs() < 1e-9);
    }

    #[test]
    fn total_violation_gives_ratio_one_hundred() {
        let table = violation_ratio_table(&[report(
            "P5051",
            ConstraintType::Symmetric,
            ConstraintStatus::Normal,
            0,
            64,
        )]);
        assert_eq!(table.ranked[0].violation_ratio, 100.0);
        assert_eq!(table.ranked[0].incorrect, 64);
    }

    #[test]
    fn cells_sum_across_properties() {
        let table = violation_ratio_table(&[
            report("P1", ConstraintType::Type, ConstraintStatus::Normal, 10, 0),
            report("P2", ConstraintType::Type, ConstraintStatus::Normal, 6, 4),
            report(
                "P3",
                ConstraintType::Type,
                ConstraintStatus::Mandatory,
                1,
                1,
            ),
        ]);
        assert_eq!(table.rows.len(), 2);
        let normal = table
            .rows
            .iter()
            .find(|r| r.status == ConstraintStatus::Normal)
            .unwrap();
        assert_eq!((normal.correct, normal.incorrect), (16, 4));
        assert!((normal.violation_ratio() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn ranking_descends_with_name_tiebreak() {
        let table = violation_ratio_table(&[
            report("P9", ConstraintType::Type, ConstraintStatus::Normal, 1, 1),
            report("P1", ConstraintType::Type, ConstraintStatus::Normal, 1, 1),
            report("P5", ConstraintType::Type, ConstraintStatus::Normal, 0, 3),
        ]);
        let order: Vec<&str> = table.ranked.iter().map(|r| r.property.as_str()).collect();
        assert_eq!(order, ["P5", "P1", "P9"]);
        assert_eq!(table.top_k(2).len(), 2);
        assert_eq!(table.top_k(10).len(), 3);
    }

    #[test]
    fn sibling_specs_of_one_property_sum_in_the_ranking() {
        let table = violation_ratio_table(&[
            report(
                "P1321",
                ConstraintType::ItemRequiresStatement,
                ConstraintStatus::Normal,
                2,
                0,
            ),
            report(
                "P1321",
                ConstraintType::ItemRequiresStatement,
                ConstraintStatus::Normal,
                0,
                2,
            ),
        ]);
        assert_eq!(table.ranked.len(), 1);
        assert_eq!(table.ranked[0].correct, 2);
        assert_eq!(table.ranked[0].incorrect, 2);
        assert!((table.ranked[0].violation_ratio - 50.0).abs() < 1e-9);
    }

    #[test]
    fn empty_reports_give_empty_table() {
        let table = violation_ratio_table(&[]);
        assert!(table.rows.is_empty());
        assert!(table.ranked.is_empty());
        assert!(table.top_k(5).is_empty());
    }

    #[test]
    fn report_files_cover_every_key_once() {
        let mut dump = Dump::new("d", IdentityMode::Content);
        dump.statements = vec![
            Statement::new("X1", "Q1", "P106", "Q901"),
            Statement::new("X2", "Q2", "P106", "Q902"),
        ];
        let keyed = dump.keyed_statements();
        let report = ViolationReport {
            property: "P106".to_string(),
            ctype: ConstraintType::Type,
            status: ConstraintStatus::Normal,
            spec_tag: "type".to_string(),
            correct: vec![keyed[0].0.clone()],
            incorrect: vec![keyed[1].0.clone()],
        };
        let dir = tempfile::tempdir().unwrap();
        let written = write_report_files(dir.path(), &[report], &dump).unwrap();
        assert_eq!(written.len(), 2);
        let correct = std::fs::read_to_string(dir.path().join("P106.correct.tsv")).unwrap();
        let incorrect = std::fs::read_to_string(dir.path().join("P106.incorrect.tsv")).unwrap();
        assert_eq!(correct.lines().count(), 2);
        assert!(correct.contains("X1"));
        assert!(incorrect.contains("X2"));
    }
}
