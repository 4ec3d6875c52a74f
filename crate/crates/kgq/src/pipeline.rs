//! End-to-end run: every stage over a dump sequence, one report bundle out.
//!
//! Stage order is fixed: load, accumulate, redirects, classify-updates,
//! deprecated, compile, validate, combine, report, manifest. Each stage
//! consumes only in-memory results of earlier stages, so a failure names
//! the stage that broke. A complete bundle ends with `MANIFEST.tsv` listing
//! every file with its sha256 and size; a bundle without a manifest, or
//! with a `FAILED` marker, is incomplete.
//!
//! Bundles are deterministic: the same inputs and configuration produce
//! byte-identical files regardless of worker count or rerun.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::combine::{
    fixed_violations, overlap_table, payload_row, violations, violations_with_removals,
    write_key_set, write_low_quality, write_overlap, IndicatorResult, OverlapRow, PAYLOAD_COLUMNS,
};
use crate::config::PipelineConfig;
use crate::constraints::{
    ingest_constraints, violation_ratio_table, write_report_files, write_specs, IngestReport,
    SummaryTable,
};
use crate::deprecation::{aggregate_deprecated, extract_deprecated, DeprecationAggregate};
use crate::diff::{
    accumulate_with_diffs, annotate_redirects, merge_redirects, write_ledger, RedirectReport,
    RemovalLedger,
};
use crate::model::edge_io::{load_dump, sha256_file, write_tsv, ParseIssue};
use crate::model::{Dump, Statement, StatementKey};
use crate::updates::{
    classify_removals, taxonomy_switch_report, ClassificationReport, TaxonomySwitchReport,
};

/// A stage failure. The stage name matches the CLI subcommand or bundle
/// section it belongs to.
#[derive(Debug, Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, PipelineError>;
}

impl<T, E> StageExt<T> for Result<T, E>
where
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    fn stage(self, stage: &'static str) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            source: e.into(),
        })
    }
}

/// Headline counts of a completed run, plus the bundle inventory.
#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub out_dir: PathBuf,
    /// Bundle files relative to `out_dir`, in manifest order, the manifest
    /// itself last.
    pub files: Vec<String>,
    pub parse_issues: usize,
    pub dump_count: usize,
    pub ledger_entries: usize,
    pub deprecated_count: usize,
    pub spec_count: usize,
    pub live_violations: usize,
    pub fixed_violations: usize,
    pub low_quality: usize,
}

/// Exclusive advisory lock on the scratch directory; at most one run per
/// scratch directory. The lock file is removed on drop. A crashed run can
/// leave it behind, in which case the error message names the file so it
/// can be deleted by hand.
struct ScratchLock {
    path: PathBuf,
}

impl ScratchLock {
    fn acquire(scratch: &Path) -> std::io::Result<ScratchLock> {
        fs::create_dir_all(scratch)?;
        let path = scratch.join("kgq.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut file) => {
                let _ = writeln!(file, "{}", std::process::id());
                Ok(ScratchLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(std::io::Error::new(
                std::io::ErrorKind::AlreadyExists,
                format!(
                    "lock file {} exists; another run may be using this scratch \
                         directory (delete the file if that run is gone)",
                    path.display()
                ),
            )),
            Err(e) => Err(e),
        }
    }
}

impl Drop for ScratchLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Tracks which files the run wrote, relative to the bundle root. The
/// manifest lists exactly these files, so leftovers from earlier runs in
/// the same directory are never picked up.
struct Bundle {
    out_dir: PathBuf,
    files: Vec<String>,
}

impl Bundle {
    fn new(out_dir: &Path) -> Bundle {
        Bundle {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    /// Register a bundle file by relative name and return its full path.
    fn file(&mut self, rel: &str) -> PathBuf {
        self.files.push(rel.to_string());
        self.out_dir.join(rel)
    }

    /// Register a file already written under the bundle root.
    fn register(&mut self, abs: &Path) {
        let rel = abs.strip_prefix(&self.out_dir).unwrap_or(abs);
        self.files.push(rel.to_string_lossy().into_owned());
    }
}

/// Run every stage over `config.dumps` and write the bundle under
/// `out_dir`. On failure a `FAILED` file holding the stage name and error
/// chain is left in `out_dir`; files from completed stages remain for
/// inspection and the manifest is not written.
pub fn run_pipeline(
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<PipelineReport, PipelineError> {
    fs::create_dir_all(out_dir).stage("setup")?;
    let failed = out_dir.join("FAILED");
    let _ = fs::remove_file(&failed);
    match run_stages(config, out_dir) {
        Ok(report) => Ok(report),
        Err(err) => {
            let _ = fs::write(&failed, error_text(&err));
            Err(err)
        }
    }
}

fn error_text(err: &PipelineError) -> String {
    let mut text = format!("stage: {}\nerror: {}\n", err.stage, err.source);
    let mut cause = err.source.source();
    while let Some(c) = cause {
        let _ = writeln!(text, "cause: {c}");
        cause = c.source();
    }
    text
}

fn run_stages(config: &PipelineConfig, out_dir: &Path) -> Result<PipelineReport, PipelineError> {
    config.check_inputs().stage("setup")?;
    let scratch = config
        .scratch
        .clone()
        .unwrap_or_else(|| out_dir.join("scratch"));
    let _lock = ScratchLock::acquire(&scratch).stage("setup")?;

    let mut bundle = Bundle::new(out_dir);

    let mut dumps = Vec::new();
    let mut issues: Vec<ParseIssue> = Vec::new();
    for path in &config.dumps {
        let (dump, dump_issues) = load_dump(path, config.identity_mode).stage("load")?;
        issues.extend(dump_issues);
        dumps.push(dump);
    }

    let (ledger, diffs) = accumulate_with_diffs(&dumps).stage("accumulate")?;
    write_ledger(&bundle.file("ledger.tsv"), &ledger).stage("accumulate")?;
    bundle.files.push("ledger.quals.tsv".to_string());
    bundle.files.push("ledger.tsv.meta".to_string());

    let redirects = merge_redirects(dumps.iter().map(|d| &d.redirects));
    let redirect_report = annotate_redirects(&ledger, &redirects, &config.roles.instance_property);
    write_redirect_summary(&bundle.file("redirect_summary.tsv"), &redirect_report)
        .stage("redirects")?;
    write_redirect_classes(&bundle.file("redirect_classes.tsv"), &redirect_report)
        .stage("redirects")?;

    let classification =
        classify_removals(&ledger, &diffs, &config.thresholds, config.histogram_cap);
    write_classifications(&bundle.file("classifications.tsv"), &classification)
        .stage("classify-updates")?;
    write_histogram(&bundle.file("levenshtein_histogram.tsv"), &classification)
        .stage("classify-updates")?;
    write_kind_stats(&bundle.file("update_kinds.tsv"), &classification)
        .stage("classify-updates")?;
    let switches = taxonomy_switch_report(
        &ledger,
        &diffs,
        &config.roles.instance_property,
        &config.roles.subclass_property,
        config.example_cap,
    );
    write_switches(&bundle.file("taxonomy_switches.tsv"), &switches).stage("classify-updates")?;

    // Accumulation rejects an empty sequence, so a final dump exists here.
    let final_dump = dumps.last().expect("non-empty dump sequence");
    let deprecated_set = extract_deprecated(final_dump);
    let instance_index = final_dump.instance_index(&config.roles.instance_property);
    let aggregate = aggregate_deprecated(&deprecated_set, &instance_index);
    fs::create_dir_all(out_dir.join("deprecated")).stage("deprecated")?;
    write_tsv(
        &bundle.file("deprecated/deprecated.tsv"),
        &PAYLOAD_COLUMNS,
        deprecated_set.statements.iter().map(payload_row),
    )
    .stage("deprecated")?;
    write_counts(
        &bundle.file("deprecated/by_property.tsv"),
        ["property", "count"],
        &aggregate.by_property,
    )
    .stage("deprecated")?;
    write_counts(
        &bundle.file("deprecated/by_class.tsv"),
        ["class", "count"],
        &aggregate.by_class,
    )
    .stage("deprecated")?;

    let ingest = ingest_constraints(final_dump, &config.roles);
    write_specs(&bundle.file("specs.tsv"), &ingest.specs).stage("compile")?;

    let (live_set, live_reports) =
        violations(final_dump, &ingest.specs, &config.roles, config.workers);
    fs::create_dir_all(out_dir.join("reports")).stage("validate")?;
    let written = write_report_files(&out_dir.join("reports"), &live_reports, final_dump)
        .stage("validate")?;
    for path in &written {
        bundle.register(path);
    }
    let table = violation_ratio_table(&live_reports);
    table
        .write_summary(&bundle.file("reports/summary.tsv"))
        .stage("validate")?;
    table
        .write_ranked(&bundle.file("reports/vr_ranked.tsv"))
        .stage("validate")?;

    let (del_set, del_reports) = violations_with_removals(
        final_dump,
        &ledger,
        &ingest.specs,
        &config.roles,
        config.workers,
    )
    .stage("combine")?;
    let fixed = fixed_violations(&live_set, &del_set).stage("combine")?;
    let removed_keys: BTreeSet<StatementKey> = ledger.entries.keys().cloned().collect();
    let overlap = overlap_table(&removed_keys, &ingest.specs, &del_reports);

    let indicators = IndicatorResult {
        community: classification.low_quality_keys(),
        deprecated: deprecated_set
            .statements
            .iter()
            .map(|s| s.key(config.identity_mode))
            .collect(),
        violating: live_set.keys.clone(),
        fixed: fixed.clone(),
    };
    let union = indicators.low_quality();

    // Ledger keys are disjoint from the live key set, so the two payload
    // sources never collide.
    let mut payloads: BTreeMap<StatementKey, &Statement> =
        final_dump.keyed_statements().into_iter().collect();
    for (key, entry) in &ledger.entries {
        payloads.insert(key.clone(), &entry.statement);
    }

    fs::create_dir_all(out_dir.join("combined")).stage("combine")?;
    write_key_set(&bundle.file("combined/v.tsv"), &live_set.keys, &payloads).stage("combine")?;
    write_key_set(&bundle.file("combined/v_del.tsv"), &del_set.keys, &payloads).stage("combine")?;
    write_key_set(&bundle.file("combined/v_fixed.tsv"), &fixed, &payloads).stage("combine")?;
    write_overlap(&bundle.file("combined/overlap.tsv"), &overlap).stage("combine")?;
    write_low_quality(&bundle.file("combined/low_quality.tsv"), &union, &payloads)
        .stage("combine")?;

    write_tsv(
        &bundle.file("parse_issues.tsv"),
        &["kind", "detail"],
        issues
            .iter()
            .map(|issue| vec![issue.kind().to_string(), issue.to_string()]),
    )
    .stage("report")?;

    let text = report_text(ReportInputs {
        config,
        dumps: &dumps,
        issues: &issues,
        ledger: &ledger,
        redirects: &redirect_report,
        classification: &classification,
        switches: &switches,
        aggregate: &aggregate,
        deprecated_count: deprecated_set.len(),
        ingest: &ingest,
        table: &table,
        live_violations: live_set.len(),
        del_violations: del_set.len(),
        fixed_count: fixed.len(),
        overlap: &overlap,
        union: &union,
    });
    fs::write(bundle.file("report.txt"), text).stage("report")?;

    let files = write_manifest(out_dir, bundle.files).stage("manifest")?;

    Ok(PipelineReport {
        out_dir: out_dir.to_path_buf(),
        files,
        parse_issues: issues.len(),
        dump_count: dumps.len(),
        ledger_entries: ledger.entries.len(),
        deprecated_count: deprecated_set.len(),
        spec_count: ingest.specs.len(),
        live_violations: live_set.len(),
        fixed_violations: fixed.len(),
        low_quality: union.len(),
    })
}

/// Redirect counts over the ledger as metric/value rows.
pub fn write_redirect_summary(
    path: &Path,
    report: &RedirectReport,
) -> Result<(), crate::model::edge_io::ModelError> {
    let rows = vec![
        vec![
            "ledger_entries".to_string(),
            report.total_entries.to_string(),
        ],
        vec![
            "redirected_subject".to_string(),
            report.redirected_subject.to_string(),
        ],
        vec![
            "redirected_object".to_string(),
            report.redirected_object.to_string(),
        ],
        vec![
            "redirected_either".to_string(),
            report.redirected_either.to_string(),
        ],
        vec![
            "redirected_fraction".to_string(),
            format!("{:.6}", report.redirected_fraction()),
        ],
        vec![
            "redirected_typing_total".to_string(),
            report.redirected_typing_total.to_string(),
        ],
    ];
    write_tsv(path, &["metric", "value"], rows)
}

/// Classes touched by redirects, largest count first per side.
pub fn write_redirect_classes(
    path: &Path,
    report: &RedirectReport,
) -> Result<(), crate::model::edge_io::ModelError> {
    let side_rows = |side: &str, counts: &BTreeMap<String, usize>| {
        let mut rows: Vec<(String, usize)> = counts.iter().map(|(c, n)| (c.clone(), *n)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows.into_iter()
            .map(|(class, count)| {
                vec![
                    side.to_string(),
                    class,
                    count.to_string(),
                    format!("{:.2}", report.typing_percentage(count)),
                ]
            })
            .collect::<Vec<_>>()
    };
    let mut rows = side_rows("instance_class", &report.instance_classes);
    rows.extend(side_rows("redirected_class", &report.redirected_classes));
    write_tsv(
        path,
        &["side", "class", "count", "percent_of_redirected_typing"],
        rows,
    )
}

/// One row per classified removal: payload, category, similarity,
/// replacement value.
pub fn write_classifications(
    path: &Path,
    report: &ClassificationReport,
) -> Result<(), crate::model::edge_io::ModelError> {
    let rows = report.classifications.iter().map(|(_, c)| {
        let mut row = payload_row(&c.removed);
        row.push(c.removed_at.clone());
        row.push(c.category.label().to_string());
        row.push(c.similarity.kind_label().to_string());
        row.push(c.similarity.value_label());
        row.push(
            c.replacement
                .as_ref()
                .map(|v| v.raw().to_string())
                .unwrap_or_default(),
        );
        row
    });
    write_tsv(
        path,
        &[
            "id",
            "node1",
            "label",
            "node2",
            "rank",
            "removed_at",
            "category",
            "similarity_kind",
            "similarity",
            "replacement",
        ],
        rows,
    )
}

/// Edit-distance histogram as bucket/count rows, overflow last.
pub fn write_histogram(
    path: &Path,
    report: &ClassificationReport,
) -> Result<(), crate::model::edge_io::ModelError> {
    let hist = &report.histogram;
    let mut rows: Vec<Vec<String>> = hist
        .buckets
        .iter()
        .enumerate()
        .map(|(d, n)| vec![d.to_string(), n.to_string()])
        .collect();
    rows.push(vec!["overflow".to_string(), hist.overflow.to_string()]);
    write_tsv(path, &["bucket", "count"], rows)
}

/// Per-kind removal and update counts with the update fraction.
pub fn write_kind_stats(
    path: &Path,
    report: &ClassificationReport,
) -> Result<(), crate::model::edge_io::ModelError> {
    let rows = report.kind_stats.iter().map(|(kind, stats)| {
        vec![
            kind.to_string(),
            stats.removed.to_string(),
            stats.matched.to_string(),
            stats.equivalent.to_string(),
            stats.significant.to_string(),
            format!("{:.4}", stats.update_fraction()),
        ]
    });
    write_tsv(
        path,
        &[
            "kind",
            "removed",
            "matched",
            "equivalent",
            "significant",
            "update_fraction",
        ],
        rows,
    )
}

/// Taxonomy switch counts with example statement ids.
pub fn write_switches(
    path: &Path,
    report: &TaxonomySwitchReport,
) -> Result<(), crate::model::edge_io::ModelError> {
    let rows = report.counts.iter().map(|((from, target), count)| {
        let examples = report
            .examples
            .get(&(from.clone(), *target))
            .map(|stmts| {
                stmts
                    .iter()
                    .map(|s| s.id.as_str())
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        vec![
            from.clone(),
            report.target_label(*target),
            count.to_string(),
            examples,
        ]
    });
    write_tsv(
        path,
        &["from_property", "moved_to", "count", "examples"],
        rows,
    )
}

/// Name/count rows in the order given.
pub fn write_counts(
    path: &Path,
    header: [&str; 2],
    counts: &[(String, usize)],
) -> Result<(), crate::model::edge_io::ModelError> {
    let rows = counts
        .iter()
        .map(|(name, count)| vec![name.clone(), count.to_string()]);
    write_tsv(path, &header, rows)
}

/// Write `MANIFEST.tsv` over the registered files and return the final
/// inventory, manifest last. The manifest does not list itself; its own
/// hash would change the file it hashes.
fn write_manifest(out_dir: &Path, mut files: Vec<String>) -> std::io::Result<Vec<String>> {
    files.sort();
    files.dedup();
    let mut rows = Vec::new();
    for rel in &files {
        let (digest, bytes) = sha256_file(&out_dir.join(rel))?;
        rows.push(vec![rel.clone(), digest, bytes.to_string()]);
    }
    write_tsv(
        &out_dir.join("MANIFEST.tsv"),
        &["path", "sha256", "bytes"],
        rows,
    )
    .map_err(std::io::Error::other)?;
    files.push("MANIFEST.tsv".to_string());
    Ok(files)
}

struct ReportInputs<'a> {
    config: &'a PipelineConfig,
    dumps: &'a [Dump],
    issues: &'a [ParseIssue],
    ledger: &'a RemovalLedger,
    redirects: &'a RedirectReport,
    classification: &'a ClassificationReport,
    switches: &'a TaxonomySwitchReport,
    aggregate: &'a DeprecationAggregate,
    deprecated_count: usize,
    ingest: &'a IngestReport,
    table: &'a SummaryTable,
    live_violations: usize,
    del_violations: usize,
    fixed_count: usize,
    overlap: &'a [OverlapRow],
    union: &'a BTreeMap<StatementKey, crate::combine::QualityFlags>,
}

fn report_text(inputs: ReportInputs<'_>) -> String {
    let mut t = String::new();
    let labels: Vec<&str> = inputs.dumps.iter().map(|d| d.label.as_str()).collect();
    let _ = writeln!(t, "kgq run report");
    let _ = writeln!(t, "==============");
    let _ = writeln!(t);
    let _ = writeln!(t, "inputs");
    let _ = writeln!(t, "  dumps: {} ({})", inputs.dumps.len(), labels.join(", "));
    let _ = writeln!(t, "  identity mode: {}", inputs.config.identity_mode);
    let _ = writeln!(
        t,
        "  parse issues: {} (see parse_issues.tsv)",
        inputs.issues.len()
    );
    let _ = writeln!(t);

    let mut categories: BTreeMap<&'static str, usize> = BTreeMap::new();
    for (_, c) in &inputs.classification.classifications {
        *categories.entry(c.category.label()).or_insert(0) += 1;
    }
    let count = |name: &str| categories.get(name).copied().unwrap_or(0);
    let _ = writeln!(t, "removals");
    let _ = writeln!(
        t,
        "  ledger entries as of {}: {}",
        inputs.ledger.as_of,
        inputs.ledger.entries.len()
    );
    let _ = writeln!(t, "  pure removals: {}", count("pure_removal"));
    let _ = writeln!(t, "  equivalent updates: {}", count("equivalent_update"));
    let _ = writeln!(t, "  significant updates: {}", count("significant_update"));
    let _ = writeln!(
        t,
        "  community low-quality statements: {}",
        count("pure_removal") + count("significant_update")
    );
    for (kind, stats) in &inputs.classification.kind_stats {
        let _ = writeln!(
            t,
            "  {kind}: removed {}, matched {}, equivalent {}, significant {} \
             (update fraction {:.4})",
            stats.removed,
            stats.matched,
            stats.equivalent,
            stats.significant,
            stats.update_fraction()
        );
    }
    let _ = writeln!(
        t,
        "  redirected entries: {} of {} ({:.4})",
        inputs.redirects.redirected_either,
        inputs.redirects.total_entries,
        inputs.redirects.redirected_fraction()
    );
    let _ = writeln!(
        t,
        "  typing statements with a redirected endpoint: {}",
        inputs.redirects.redirected_typing_total
    );
    let switch_total: u64 = inputs.switches.counts.values().sum();
    let _ = writeln!(t, "  taxonomy statements tracked: {switch_total}");
    let _ = writeln!(t);

    let _ = writeln!(t, "deprecated");
    let _ = writeln!(t, "  statements: {}", inputs.deprecated_count);
    let _ = writeln!(t, "  top properties:");
    for (property, count) in inputs
        .aggregate
        .by_property
        .iter()
        .take(inputs.config.top_k)
    {
        let _ = writeln!(t, "    {property}: {count}");
    }
    let _ = writeln!(t);

    let ing = inputs.ingest;
    let _ = writeln!(t, "constraints");
    let _ = writeln!(t, "  specs compiled: {}", ing.specs.len());
    let _ = writeln!(
        t,
        "  declarations skipped: {} (unsupported {}, external-id {}, missing classes {}, \
         unknown relation {}, malformed {})",
        ing.skipped_total(),
        ing.skipped_unsupported,
        ing.skipped_external_id,
        ing.skipped_missing_classes,
        ing.skipped_unknown_relation,
        ing.skipped_malformed
    );
    if !ing.issues.is_empty() {
        let _ = writeln!(t, "  ingest notes:");
        for issue in &ing.issues {
            let _ = writeln!(t, "    {issue}");
        }
    }
    let _ = writeln!(t, "  top violation ratios:");
    for row in inputs.table.top_k(inputs.config.top_k) {
        let _ = writeln!(
            t,
            "    {} {} {}: {}/{} (vr {:.4})",
            row.property,
            row.ctype,
            row.status,
            row.incorrect,
            row.correct + row.incorrect,
            row.violation_ratio
        );
    }
    let _ = writeln!(t);

    let flag_counts = inputs.union.values().fold((0, 0, 0), |acc, flags| {
        (
            acc.0 + usize::from(flags.community),
            acc.1 + usize::from(flags.deprecated),
            acc.2 + usize::from(flags.constraint),
        )
    });
    let _ = writeln!(t, "combined");
    let _ = writeln!(
        t,
        "  violations in the live dump: {}",
        inputs.live_violations
    );
    let _ = writeln!(
        t,
        "  violations with removals restored: {}",
        inputs.del_violations
    );
    let _ = writeln!(t, "  violations fixed by removals: {}", inputs.fixed_count);
    let _ = writeln!(t, "  removed statements overlapping violations:");
    for row in inputs.overlap {
        let _ = writeln!(t, "    {} {}: {}", row.ctype, row.status, row.render());
    }
    let _ = writeln!(
        t,
        "  low-quality union: {} (community {}, deprecated {}, constraint {})",
        inputs.union.len(),
        flag_counts.0,
        flag_counts.1,
        flag_counts.2
    );
    let _ = writeln!(t);

    let _ = writeln!(t, "notes");
    let _ = writeln!(
        t,
        "  Statements added between dumps can fix or introduce violations on"
    );
    let _ = writeln!(
        t,
        "  their own. The fixed count above covers only violations that"
    );
    let _ = writeln!(
        t,
        "  disappear when removed statements are restored; it attributes"
    );
    let _ = writeln!(t, "  nothing to additions.");
    t
}
