//! Classification of removed statements as pure removals, equivalent
//! updates, or significant updates.
//!
//! A removed statement is matched against the statements added in the same
//! interval that share its subject and property. The closest candidate by
//! per-kind similarity becomes the replacement; the similarity then decides
//! whether the pair is a stylistic rewrite (equivalent) or a real change
//! (significant). Removals that stay unmatched are pure removals. The
//! low-quality set keeps pure removals and significant updates; equivalent
//! updates drop out.

use std::collections::{BTreeMap, BTreeSet};

use crate::diff::{DumpDiff, RemovalLedger};
use crate::model::{DateParts, LiteralKind, LiteralValue, Statement, StatementKey};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum UpdateError {
    #[error("quantities carry different units: `{left}` vs `{right}`")]
    IncomparableUnits { left: String, right: String },
    #[error("value is not a date: `{value}`")]
    UnparsableDate { value: String },
}

/// Levenshtein edit distance over Unicode scalar values, unit costs.
pub fn string_distance(a: &str, b: &str) -> usize {
    let a_chars: Vec<char> = a.chars().collect();
    let b_chars: Vec<char> = b.chars().collect();
    if a_chars.is_empty() {
        return b_chars.len();
    }
    if b_chars.is_empty() {
        return a_chars.len();
    }
    let mut prev: Vec<usize> = (0..=b_chars.len()).collect();
    let mut curr = vec![0usize; b_chars.len() + 1];
    for (i, &ca) in a_chars.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &cb) in b_chars.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            curr[j + 1] = substitution.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b_chars.len()]
}

/// Distance between two dates, measured at the coarser of their precisions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DateDelta {
    /// True iff the canonical forms are identical (timestamp and precision).
    pub equivalent: bool,
    /// The coarser precision the comparison was made at.
    pub precision: u8,
    /// Absolute difference in whole units of that precision.
    pub units: u64,
}

impl DateDelta {
    /// Rough length of the delta in seconds, for ranking candidates.
    pub fn approx_seconds(&self) -> f64 {
        const YEAR: f64 = 31_557_600.0;
        let unit_seconds = match self.precision {
            14 => 1.0,
            13 => 60.0,
            12 => 3_600.0,
            11 => 86_400.0,
            10 => YEAR / 12.0,
            p => YEAR * 10f64.powi(9 - p as i32),
        };
        self.units as f64 * unit_seconds
    }
}

/// Proleptic Gregorian day number for a civil date, days since 1970-01-01.
fn days_from_civil(year: i64, month: u8, day: u8) -> i64 {
    let m = month.clamp(1, 12) as i64;
    let d = day.max(1) as i64;
    let y = if m <= 2 { year - 1 } else { year };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = if m > 2 { m - 3 } else { m + 9 };
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146097 + doe - 719468
}

/// Timestamp expressed in whole units of the given precision.
fn units_at_precision(parts: &DateParts, precision: u8) -> i128 {
    match precision {
        p if p >= 11 => {
            let days = days_from_civil(parts.year, parts.month, parts.day) as i128;
            let seconds = days * 86_400
                + parts.hour as i128 * 3_600
                + parts.minute as i128 * 60
                + parts.second as i128;
            let unit = match p {
                14 => 1,
                13 => 60,
                12 => 3_600,
                _ => 86_400,
            };
            seconds.div_euclid(unit)
        }
        10 => parts.year as i128 * 12 + parts.month.max(1) as i128 - 1,
        p => {
            // Year precision and coarser: decades, centuries and beyond are
            // successive powers of ten.
            let unit = 10i128.pow(9u32.saturating_sub(p as u32));
            (parts.year as i128).div_euclid(unit)
        }
    }
}

/// Compare two date values at the coarser of their precisions. The
/// equivalence flag is canonical equality, so two dates can be zero units
/// apart yet not equivalent when their precisions differ.
pub fn date_distance(a: &LiteralValue, b: &LiteralValue) -> Result<DateDelta, UpdateError> {
    let pa = a.date_parts().ok_or_else(|| UpdateError::UnparsableDate {
        value: a.raw().to_string(),
    })?;
    let pb = b.date_parts().ok_or_else(|| UpdateError::UnparsableDate {
        value: b.raw().to_string(),
    })?;
    let precision = pa.precision.min(pb.precision);
    let ua = units_at_precision(&pa, precision);
    let ub = units_at_precision(&pb, precision);
    Ok(DateDelta {
        equivalent: a.canonical() == b.canonical(),
        precision,
        units: ua.abs_diff(ub) as u64,
    })
}

/// Absolute difference of two quantity magnitudes. Units must agree;
/// mismatched units are incomparable, never coerced.
pub fn quantity_distance(a: &LiteralValue, b: &LiteralValue) -> Result<f64, UpdateError> {
    let (ma, mb) = match (a.magnitude(), b.magnitude()) {
        (Some(ma), Some(mb)) => (ma, mb),
        _ => {
            return Err(UpdateError::UnparsableDate {
                value: if a.magnitude().is_none() {
                    a.raw()
                } else {
                    b.raw()
                }
                .to_string(),
            })
        }
    };
    if a.unit() != b.unit() {
        return Err(UpdateError::IncomparableUnits {
            left: a.unit().unwrap_or("1").to_string(),
            right: b.unit().unwrap_or("1").to_string(),
        });
    }
    Ok((ma - mb).abs())
}

/// Per-kind similarity between a removed value and its replacement.
#[derive(Clone, Debug, PartialEq)]
pub enum Similarity {
    /// String-valued pair: Levenshtein distance.
    EditDistance(usize),
    /// Date-valued pair: delta at the coarser precision.
    TimeDelta(DateDelta),
    /// Quantity pair with matching units: magnitude difference.
    MagnitudeDelta(f64),
    /// Kinds differ, units differ, or entity objects differ.
    Incomparable,
    /// No replacement exists.
    None,
}

impl Similarity {
    /// Ranking score; lower is more similar.
    fn score(&self) -> f64 {
        match self {
            Similarity::EditDistance(d) => *d as f64,
            Similarity::TimeDelta(delta) => {
                if delta.equivalent {
                    0.0
                } else {
                    delta.approx_seconds()
                }
            }
            Similarity::MagnitudeDelta(d) => d.abs(),
            Similarity::Incomparable | Similarity::None => f64::INFINITY,
        }
    }

    pub fn kind_label(&self) -> &'static str {
        match self {
            Similarity::EditDistance(_) => "edit_distance",
            Similarity::TimeDelta(_) => "time_delta",
            Similarity::MagnitudeDelta(_) => "magnitude_delta",
            Similarity::Incomparable => "incomparable",
            Similarity::None => "none",
        }
    }

    pub fn value_label(&self) -> String {
        match self {
            Similarity::EditDistance(d) => d.to_string(),
            Similarity::TimeDelta(delta) => {
                format!("{}@{}", delta.units, delta.precision)
            }
            Similarity::MagnitudeDelta(d) => format!("{d}"),
            Similarity::Incomparable | Similarity::None => String::new(),
        }
    }
}

/// Similarity between two literal values of any kind.
pub fn similarity(removed: &LiteralValue, replacement: &LiteralValue) -> Similarity {
    use LiteralKind::*;
    match (removed.kind(), replacement.kind()) {
        (Date, Date) => match date_distance(removed, replacement) {
            Ok(delta) => Similarity::TimeDelta(delta),
            Err(_) => Similarity::Incomparable,
        },
        (Quantity, Quantity) => match quantity_distance(removed, replacement) {
            Ok(delta) => Similarity::MagnitudeDelta(delta),
            Err(_) => Similarity::Incomparable,
        },
        (Entity, Entity) => {
            if removed.canonical() == replacement.canonical() {
                Similarity::EditDistance(0)
            } else {
                Similarity::Incomparable
            }
        }
        (String, String) | (Other, Other) | (String, Other) | (Other, String) => {
            Similarity::EditDistance(string_distance(
                removed.canonical(),
                replacement.canonical(),
            ))
        }
        _ => Similarity::Incomparable,
    }
}

/// Equivalence thresholds separating stylistic rewrites from real changes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// Strings are equivalent at edit distance at or below this.
    pub string_absolute: usize,
    /// Or when distance divided by the longer length is at or below this.
    pub string_relative: f64,
    /// Quantities are equivalent at or below this relative difference.
    pub quantity_relative: f64,
}

impl Default for Thresholds {
    fn default() -> Thresholds {
        Thresholds {
            string_absolute: 2,
            string_relative: 0.1,
            quantity_relative: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum UpdateCategory {
    PureRemoval,
    EquivalentUpdate,
    SignificantUpdate,
}

impl UpdateCategory {
    pub fn label(&self) -> &'static str {
        match self {
            UpdateCategory::PureRemoval => "pure_removal",
            UpdateCategory::EquivalentUpdate => "equivalent_update",
            UpdateCategory::SignificantUpdate => "significant_update",
        }
    }
}

/// Verdict for one removed statement.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateClassification {
    pub removed: Statement,
    pub replacement: Option<LiteralValue>,
    pub category: UpdateCategory,
    pub similarity: Similarity,
    /// Dump tag the removal was recorded at.
    pub removed_at: String,
}

/// Added statements of one interval, indexed by subject, then property.
pub struct AddedIndex<'a> {
    by_subject: BTreeMap<&'a str, BTreeMap<&'a str, Vec<&'a Statement>>>,
}

impl<'a> AddedIndex<'a> {
    pub fn build(diff: &'a DumpDiff) -> AddedIndex<'a> {
        let mut by_subject: BTreeMap<&str, BTreeMap<&str, Vec<&Statement>>> = BTreeMap::new();
        for stmt in diff.added.values() {
            by_subject
                .entry(stmt.subject.as_str())
                .or_default()
                .entry(stmt.property.as_str())
                .or_default()
                .push(stmt);
        }
        AddedIndex { by_subject }
    }

    pub fn candidates(&self, subject: &str, property: &str) -> &[&'a Statement] {
        self.by_subject
            .get(subject)
            .and_then(|props| props.get(property))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Whether any statement with this subject and property was added.
    pub fn has(&self, subject: &str, property: &str) -> bool {
        !self.candidates(subject, property).is_empty()
    }
}

/// The added statement replacing a removed one, if any: same subject and
/// property, smallest similarity score, ties broken by canonical value.
pub fn match_update<'a>(removed: &Statement, added: &AddedIndex<'a>) -> Option<&'a Statement> {
    let candidates = added.candidates(&removed.subject, &removed.property);
    candidates
        .iter()
        .min_by(|a, b| {
            let score_a = similarity(&removed.object, &a.object).score();
            let score_b = similarity(&removed.object, &b.object).score();
            score_a
                .partial_cmp(&score_b)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.object.canonical().cmp(b.object.canonical()))
        })
        .copied()
}

/// Classify one removed statement against its optional replacement.
pub fn classify(
    removed: &Statement,
    replacement: Option<&Statement>,
    removed_at: &str,
    thresholds: &Thresholds,
) -> UpdateClassification {
    let (category, similarity, replacement_value) = match replacement {
        None => (UpdateCategory::PureRemoval, Similarity::None, None),
        Some(added) => {
            let sim = similarity(&removed.object, &added.object);
            let equivalent = match &sim {
                Similarity::EditDistance(d) => {
                    let longest = removed
                        .object
                        .canonical()
                        .chars()
                        .count()
                        .max(added.object.canonical().chars().count());
                    *d <= thresholds.string_absolute
                        || (longest > 0 && *d as f64 / longest as f64 <= thresholds.string_relative)
                }
                Similarity::TimeDelta(delta) => delta.equivalent,
                Similarity::MagnitudeDelta(delta) => {
                    let scale = removed
                        .object
                        .magnitude()
                        .unwrap_or(0.0)
                        .abs()
                        .max(added.object.magnitude().unwrap_or(0.0).abs());
                    if scale == 0.0 {
                        *delta == 0.0
                    } else {
                        delta / scale <= thresholds.quantity_relative
                    }
                }
                Similarity::Incomparable | Similarity::None => false,
            };
            let category = if equivalent {
                UpdateCategory::EquivalentUpdate
            } else {
                UpdateCategory::SignificantUpdate
            };
            (category, sim, Some(added.object.clone()))
        }
    };
    UpdateClassification {
        removed: removed.clone(),
        replacement: replacement_value,
        category,
        similarity,
        removed_at: removed_at.to_string(),
    }
}

/// Unit-width histogram of Levenshtein distances with one overflow bucket.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub cap: usize,
    pub buckets: Vec<u64>,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(cap: usize) -> Histogram {
        Histogram {
            cap,
            buckets: vec![0; cap + 1],
            overflow: 0,
        }
    }

    pub fn record(&mut self, distance: usize) {
        if distance <= self.cap {
            self.buckets[distance] += 1;
        } else {
            self.overflow += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.buckets.iter().sum::<u64>() + self.overflow
    }
}

/// Per-literal-kind removal and update tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KindStats {
    pub removed: usize,
    pub matched: usize,
    pub equivalent: usize,
    pub significant: usize,
}

impl KindStats {
    /// Fraction of removals of this kind that found a replacement.
    pub fn update_fraction(&self) -> f64 {
        if self.removed == 0 {
            0.0
        } else {
            self.matched as f64 / self.removed as f64
        }
    }
}

/// Full classification of a removal ledger.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationReport {
    pub classifications: Vec<(StatementKey, UpdateClassification)>,
    pub histogram: Histogram,
    pub kind_stats: BTreeMap<LiteralKind, KindStats>,
}

impl ClassificationReport {
    /// Keys of the community low-quality set: pure removals plus
    /// significant updates. Equivalent updates are excluded.
    pub fn low_quality_keys(&self) -> BTreeSet<StatementKey> {
        self.classifications
            .iter()
            .filter(|(_, c)| c.category != UpdateCategory::EquivalentUpdate)
            .map(|(key, _)| key.clone())
            .collect()
    }
}

/// Classify every ledger entry against the interval in which it was
/// removed. `diffs` are the interval diffs from the same accumulate run;
/// an entry matches the diff whose new label equals its removed-at tag.
pub fn classify_removals(
    ledger: &RemovalLedger,
    diffs: &[DumpDiff],
    thresholds: &Thresholds,
    histogram_cap: usize,
) -> ClassificationReport {
    let indexes: BTreeMap<&str, AddedIndex<'_>> = diffs
        .iter()
        .map(|diff| (diff.new_label.as_str(), AddedIndex::build(diff)))
        .collect();
    let mut classifications = Vec::with_capacity(ledger.entries.len());
    let mut histogram = Histogram::new(histogram_cap);
    let mut kind_stats: BTreeMap<LiteralKind, KindStats> = BTreeMap::new();
    for (key, entry) in &ledger.entries {
        let replacement = indexes
            .get(entry.removed_at.as_str())
            .and_then(|index| match_update(&entry.statement, index));
        let classification = classify(&entry.statement, replacement, &entry.removed_at, thresholds);
        let stats = kind_stats.entry(entry.statement.object.kind()).or_default();
        stats.removed += 1;
        if classification.replacement.is_some() {
            stats.matched += 1;
        }
        match classification.category {
            UpdateCategory::EquivalentUpdate => stats.equivalent += 1,
            UpdateCategory::SignificantUpdate => stats.significant += 1,
            UpdateCategory::PureRemoval => {}
        }
        if let Similarity::EditDistance(d) = &classification.similarity {
            if classification.replacement.is_some() {
                histogram.record(*d);
            }
        }
        classifications.push((key.clone(), classification));
    }
    ClassificationReport {
        classifications,
        histogram,
        kind_stats,
    }
}

/// Where the taxonomy statement for a subject went after removal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SwitchTarget {
    Instance,
    Subclass,
    Both,
    Neither,
}

/// Counts and examples for the eight switch categories:
/// {instance, subclass} removed × {instance, subclass, both, neither} added.
#[derive(Clone, Debug, PartialEq)]
pub struct TaxonomySwitchReport {
    pub instance_property: String,
    pub subclass_property: String,
    pub counts: BTreeMap<(String, SwitchTarget), u64>,
    pub examples: BTreeMap<(String, SwitchTarget), Vec<Statement>>,
    pub example_cap: usize,
}

impl TaxonomySwitchReport {
    pub fn target_label(&self, target: SwitchTarget) -> String {
        match target {
            SwitchTarget::Instance => self.instance_property.clone(),
            SwitchTarget::Subclass => self.subclass_property.clone(),
            SwitchTarget::Both => "both".to_string(),
            SwitchTarget::Neither => "none".to_string(),
        }
    }

    pub fn count(&self, from: &str, target: SwitchTarget) -> u64 {
        self.counts
            .get(&(from.to_string(), target))
            .copied()
            .unwrap_or(0)
    }
}

/// Assign every removed typing statement to one of eight categories by
/// which taxonomy properties gained statements for the same subject in the
/// removal interval.
pub fn taxonomy_switch_report(
    ledger: &RemovalLedger,
    diffs: &[DumpDiff],
    instance_property: &str,
    subclass_property: &str,
    example_cap: usize,
) -> TaxonomySwitchReport {
    let indexes: BTreeMap<&str, AddedIndex<'_>> = diffs
        .iter()
        .map(|diff| (diff.new_label.as_str(), AddedIndex::build(diff)))
        .collect();
    let mut report = TaxonomySwitchReport {
        instance_property: instance_property.to_string(),
        subclass_property: subclass_property.to_string(),
        counts: BTreeMap::new(),
        examples: BTreeMap::new(),
        example_cap,
    };
    for from in [instance_property, subclass_property] {
        for target in [
            SwitchTarget::Instance,
            SwitchTarget::Subclass,
            SwitchTarget::Both,
            SwitchTarget::Neither,
        ] {
            report.counts.insert((from.to_string(), target), 0);
        }
    }
    for entry in ledger.entries.values() {
        let stmt = &entry.statement;
        if stmt.property != instance_property && stmt.property != subclass_property {
            continue;
        }
        let (instance_added, subclass_added) = match indexes.get(entry.removed_at.as_str()) {
            Some(index) => (
                index.has(&stmt.subject, instance_property),
                index.has(&stmt.subject, subclass_property),
            ),
            None => (false, false),
        };
        let target = match (instance_added, subclass_added) {
            (true, true) => SwitchTarget::Both,
            (true, false) => SwitchTarget::Instance,
            (false, true) => SwitchTarget::Subclass,
            (false, false) => SwitchTarget::Neither,
        };
        let cat = (stmt.property.clone(), target);
        *report.counts.entry(cat.clone()).or_insert(0) += 1;
        let examples = report.examples.entry(cat).or_default();
        if examples.len() < example_cap {
            examples.push(stmt.clone());
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::accumulate_with_diffs;
    use crate::model::{Dump, IdentityMode};
    use proptest::prelude::*;

    #[test]
    fn string_distance_basics() {
        assert_eq!(string_distance("abc", "abc"), 0);
        assert_eq!(string_distance("", "abc"), 3);
        assert_eq!(string_distance("kitten", "sitting"), 3);
        assert_eq!(
            string_distance("Pamela C Rasmussen", "Pamela C. Rasmussen"),
            1
        );
    }

    #[test]
    fn padded_and_plain_date_forms_are_equivalent() {
        let a = LiteralValue::parse("000000001964-00-00T00:00:00Z/9");
        let b = LiteralValue::parse("1964-00-00T00:00:00Z/9");
        let delta = date_distance(&a, &b).unwrap();
        assert!(delta.equivalent);
        assert_eq!(delta.units, 0);
    }

    #[test]
    fn year_apart_dates_measure_one_year() {
        let a = LiteralValue::parse("1964-00-00T00:00:00Z/9");
        let b = LiteralValue::parse("1965-00-00T00:00:00Z/9");
        let delta = date_distance(&a, &b).unwrap();
        assert!(!delta.equivalent);
        assert_eq!(delta.precision, 9);
        assert_eq!(delta.units, 1);
    }

    #[test]
    fn mixed_precision_compares_at_the_coarser() {
        let a = LiteralValue::parse("1964-03-00T00:00:00Z/10");
        let b = LiteralValue::parse("1964-00-00T00:00:00Z/9");
        let delta = date_distance(&a, &b).unwrap();
        assert_eq!(delta.precision, 9);
        assert_eq!(delta.units, 0);
        assert!(!delta.equivalent);
    }

    #[test]
    fn day_precision_differences_count_days() {
        let a = LiteralValue::parse("2020-03-01T00:00:00Z/11");
        let b = LiteralValue::parse("2020-03-31T00:00:00Z/11");
        let delta = date_distance(&a, &b).unwrap();
        assert_eq!(delta.precision, 11);
        assert_eq!(delta.units, 30);
    }

    #[test]
    fn quantity_distance_is_magnitude_difference() {
        let a = LiteralValue::parse("5.0");
        let b = LiteralValue::parse("7.5");
        assert_eq!(quantity_distance(&a, &b).unwrap(), 2.5);
        assert_eq!(quantity_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn unit_mismatch_is_incomparable() {
        let a = LiteralValue::parse("5 Q828224");
        let b = LiteralValue::parse("5 Q253276");
        assert_eq!(
            quantity_distance(&a, &b),
            Err(UpdateError::IncomparableUnits {
                left: "Q828224".to_string(),
                right: "Q253276".to_string(),
            })
        );
    }

    fn diff_with_added(added: &[(&str, &str, &str)]) -> DumpDiff {
        let mut diff = DumpDiff {
            old_label: "d0".to_string(),
            new_label: "d1".to_string(),
            ..DumpDiff::default()
        };
        for (i, (s, p, o)) in added.iter().enumerate() {
            let stmt = Statement::new(&format!("A{i}"), s, p, o);
            diff.added.insert(stmt.key(IdentityMode::Content), stmt);
        }
        diff
    }

    #[test]
    fn match_update_requires_subject_and_property() {
        let removed = Statement::new("X1", "Q1", "P569", "1964-00-00T00:00:00Z/9");
        let diff = diff_with_added(&[("Q1", "P570", "1965-00-00T00:00:00Z/9")]);
        let index = AddedIndex::build(&diff);
        assert!(match_update(&removed, &index).is_none());
    }

    #[test]
    fn match_update_picks_the_closest_candidate() {
        let removed = Statement::new("X1", "Q1", "P1476", "colour of the sky");
        let diff = diff_with_added(&[
            ("Q1", "P1476", "color of the sky"),
            ("Q1", "P1476", "something else entirely"),
        ]);
        let index = AddedIndex::build(&diff);
        let replacement = match_update(&removed, &index).unwrap();
        assert_eq!(replacement.object.canonical(), "color of the sky");
    }

    #[test]
    fn classify_pure_removal() {
        let removed = Statement::new("X1", "Q1", "P1476", "gone");
        let c = classify(&removed, None, "d1", &Thresholds::default());
        assert_eq!(c.category, UpdateCategory::PureRemoval);
        assert_eq!(c.similarity, Similarity::None);
        assert!(c.replacement.is_none());
    }

    #[test]
    fn classify_equivalent_string_update() {
        let removed = Statement::new("X1", "Q1", "P1476", "Pamela C Rasmussen");
        let added = Statement::new("A1", "Q1", "P1476", "Pamela C. Rasmussen");
        let c = classify(&removed, Some(&added), "d1", &Thresholds::default());
        assert_eq!(c.category, UpdateCategory::EquivalentUpdate);
        assert_eq!(c.similarity, Similarity::EditDistance(1));
    }

    #[test]
    fn classify_significant_string_update() {
        let removed = Statement::new("X1", "Q1", "P1476", "alpha");
        let added = Statement::new("A1", "Q1", "P1476", "omega entirely different");
        let c = classify(&removed, Some(&added), "d1", &Thresholds::default());
        assert_eq!(c.category, UpdateCategory::SignificantUpdate);
    }

    #[test]
    fn relative_threshold_tolerates_long_strings() {
        // Distance 4 exceeds the absolute threshold but is 4% of length.
        let base = "a".repeat(100);
        let edited = format!("{}bbbb", &base[..96]);
        let removed = Statement::new("X1", "Q1", "P1476", &base);
        let added = Statement::new("A1", "Q1", "P1476", &edited);
        let c = classify(&removed, Some(&added), "d1", &Thresholds::default());
        assert_eq!(c.similarity, Similarity::EditDistance(4));
        assert_eq!(c.category, UpdateCategory::EquivalentUpdate);
    }

    #[test]
    fn classify_unit_mismatch_is_significant() {
        let removed = Statement::new("X1", "Q1", "P2044", "5 Q828224");
        let added = Statement::new("A1", "Q1", "P2044", "5 Q253276");
        let c = classify(&removed, Some(&added), "d1", &Thresholds::default());
        assert_eq!(c.category, UpdateCategory::SignificantUpdate);
        assert_eq!(c.similarity, Similarity::Incomparable);
    }

    fn dump_of(label: &str, rows: &[(&str, &str, &str, &str)]) -> Dump {
        let mut dump = Dump::new(label, IdentityMode::Content);
        for (id, s, p, o) in rows {
            dump.statements.push(Statement::new(id, s, p, o));
        }
        dump
    }

    #[test]
    fn classify_removals_partitions_the_ledger() {
        let d0 = dump_of(
            "d0",
            &[
                ("X1", "Q1", "P1476", "colour of the sky"),
                ("X2", "Q2", "P569", "1964-00-00T00:00:00Z/9"),
                ("X3", "Q3", "P2044", "5.0"),
                ("X4", "Q4", "P17", "Q30"),
            ],
        );
        let d1 = dump_of(
            "d1",
            &[
                ("Y1", "Q1", "P1476", "color of the sky"),
                ("Y2", "Q2", "P569", "1971-00-00T00:00:00Z/9"),
            ],
        );
        let (ledger, diffs) = accumulate_with_diffs(&[d0, d1]).unwrap();
        assert_eq!(ledger.len(), 4);
        let report = classify_removals(&ledger, &diffs, &Thresholds::default(), 50);
        assert_eq!(report.classifications.len(), 4);
        let by_subject: BTreeMap<&str, &UpdateClassification> = report
            .classifications
            .iter()
            .map(|(_, c)| (c.removed.subject.as_str(), c))
            .collect();
        assert_eq!(by_subject["Q1"].category, UpdateCategory::EquivalentUpdate);
        assert_eq!(by_subject["Q2"].category, UpdateCategory::SignificantUpdate);
        assert_eq!(by_subject["Q3"].category, UpdateCategory::PureRemoval);
        assert_eq!(by_subject["Q4"].category, UpdateCategory::PureRemoval);
        // S_c keeps everything except the equivalent update.
        let low_quality = report.low_quality_keys();
        assert_eq!(low_quality.len(), 3);
        // One string update at distance 1.
        assert_eq!(report.histogram.total(), 1);
        assert_eq!(report.histogram.buckets[1], 1);
        let string_stats = report.kind_stats[&LiteralKind::String];
        assert_eq!(string_stats.removed, 1);
        assert_eq!(string_stats.matched, 1);
        assert!((string_stats.update_fraction() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn taxonomy_switches_cover_all_eight_categories() {
        let d0 = dump_of(
            "d0",
            &[
                ("X1", "Q10", "P31", "Q100"),
                ("X2", "Q11", "P31", "Q100"),
                ("X3", "Q12", "P31", "Q100"),
                ("X4", "Q13", "P31", "Q100"),
                ("X5", "Q14", "P279", "Q100"),
                ("X6", "Q15", "P279", "Q100"),
                ("X7", "Q16", "P279", "Q100"),
                ("X8", "Q17", "P279", "Q100"),
            ],
        );
        let d1 = dump_of(
            "d1",
            &[
                // Q10: instance statement replaced by another instance.
                ("Y1", "Q10", "P31", "Q200"),
                // Q11: switched to subclass.
                ("Y2", "Q11", "P279", "Q200"),
                // Q12: both added.
                ("Y3", "Q12", "P31", "Q200"),
                ("Y4", "Q12", "P279", "Q200"),
                // Q13: nothing added.
                // Q14: subclass replaced by instance.
                ("Y5", "Q14", "P31", "Q200"),
                // Q15: subclass replaced by subclass.
                ("Y6", "Q15", "P279", "Q200"),
                // Q16: both added.
                ("Y7", "Q16", "P31", "Q200"),
                ("Y8", "Q16", "P279", "Q200"),
                // Q17: nothing added.
            ],
        );
        let (ledger, diffs) = accumulate_with_diffs(&[d0, d1]).unwrap();
        let report = taxonomy_switch_report(&ledger, &diffs, "P31", "P279", 3);
        for from in ["P31", "P279"] {
            for target in [
                SwitchTarget::Instance,
                SwitchTarget::Subclass,
                SwitchTarget::Both,
                SwitchTarget::Neither,
            ] {
                assert_eq!(report.count(from, target), 1, "{from} -> {target:?}");
            }
        }
        assert_eq!(report.counts.values().sum::<u64>(), 8);
    }

    #[test]
    fn removed_instance_switched_to_subclass() {
        let d0 = dump_of("d0", &[("X1", "Q10", "P31", "Q100")]);
        let d1 = dump_of("d1", &[("Y1", "Q10", "P279", "Q100")]);
        let (ledger, diffs) = accumulate_with_diffs(&[d0, d1]).unwrap();
        let report = taxonomy_switch_report(&ledger, &diffs, "P31", "P279", 3);
        assert_eq!(report.count("P31", SwitchTarget::Subclass), 1);
        assert_eq!(
            report.examples[&("P31".to_string(), SwitchTarget::Subclass)].len(),
            1
        );
    }

    proptest! {
        #[test]
        fn string_distance_is_a_metric(
            a in "[a-e]{0,12}",
            b in "[a-e]{0,12}",
            c in "[a-e]{0,12}",
        ) {
            let ab = string_distance(&a, &b);
            let ba = string_distance(&b, &a);
            let ac = string_distance(&a, &c);
            let cb = string_distance(&c, &b);
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(ab <= ac + cb);
        }

        #[test]
        fn every_classification_gets_exactly_one_category(
            removed_values in proptest::collection::vec("[a-z]{1,10}", 1..20),
            keep in proptest::collection::vec(proptest::bool::ANY, 1..20),
        ) {
            let d0 = {
                let mut d = Dump::new("d0", IdentityMode::Content);
                for (i, v) in removed_values.iter().enumerate() {
                    d.statements.push(Statement::new(
                        &format!("X{i}"), &format!("Q{i}"), "P1476", v,
                    ));
                }
                d
            };
            let d1 = {
                let mut d = Dump::new("d1", IdentityMode::Content);
                for (i, v) in removed_values.iter().enumerate() {
                    if *keep.get(i).unwrap_or(&false) {
                        d.statements.push(Statement::new(
                            &format!("Y{i}"), &format!("Q{i}"), "P1476",
                            &format!("{v}-altered-beyond-thresholds"),
                        ));
                    }
                }
                d
            };
            let (ledger, diffs) = accumulate_with_diffs(&[d0, d1]).unwrap();
            let report = classify_removals(&ledger, &diffs, &Thresholds::default(), 50);
            prop_assert_eq!(report.classifications.len(), ledger.len());
            // Low-quality set is a subset of ledger keys.
            for key in report.low_quality_keys() {
                prop_assert!(ledger.entries.contains_key(&key));
            }
            // Histogram counts string updates exactly.
            let string_updates = report
                .classifications
                .iter()
                .filter(|(_, c)| {
                    c.replacement.is_some()
                        && matches!(c.similarity, Similarity::EditDistance(_))
                })
                .count() as u64;
            prop_assert_eq!(report.histogram.total(), string_updates);
        }
    }
}
