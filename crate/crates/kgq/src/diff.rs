//! Pairwise dump diffs and the accumulated permanent-removal ledger.
//!
//! A diff between two snapshots splits into the added set (keys present
//! only in the newer dump) and the removed set (keys present only in the
//! older one). Folding diffs across a chronological dump sequence yields
//! the removal ledger: statements that disappeared at some point and never
//! came back. A statement that is removed and later re-added is evicted
//! from the ledger, so the ledger at the final dump never intersects it.
//!
//! Two diff paths exist: an in-memory one over loaded [`Dump`]s and a
//! streaming one over key-sorted edge files that holds only a bounded
//! buffer, for inputs larger than memory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::extsort::{ExternalSorter, SortError, SortedStream};
use crate::model::edge_io::{self, EdgeStream, EdgeWriter, ModelError, ParseIssue};
use crate::model::{Dump, IdentityMode, Statement, StatementKey};

#[derive(Debug, thiserror::Error)]
pub enum DiffError {
    #[error("identity mode mismatch: left dump uses {left}, right dump uses {right}")]
    IdentityModeMismatch {
        left: IdentityMode,
        right: IdentityMode,
    },
    #[error("dump sequence is empty")]
    EmptySequence,
    #[error("ledger metadata error in {path}: {detail}")]
    LedgerMeta { path: PathBuf, detail: String },
    #[error(transparent)]
    Parse(#[from] ModelError),
    #[error(transparent)]
    Sort(#[from] SortError),
}

/// Added and removed statements between two dumps, keyed canonically.
/// Payloads are kept because downstream classification needs the removed
/// statement's object and the added candidates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DumpDiff {
    pub old_label: String,
    pub new_label: String,
    pub added: BTreeMap<StatementKey, Statement>,
    pub removed: BTreeMap<StatementKey, Statement>,
}

/// One permanently removed statement: the payload from the dump where it
/// last appeared, plus the label of the first dump it was absent from.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerEntry {
    pub statement: Statement,
    pub removed_at: String,
}

/// Accumulated removals as of one dump. Disjoint from that dump's key set
/// by construction: re-added statements are evicted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RemovalLedger {
    pub as_of: String,
    pub identity_mode: IdentityMode,
    pub entries: BTreeMap<StatementKey, LedgerEntry>,
}

impl RemovalLedger {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Diff two loaded dumps: added = keys(new) \ keys(old), removed =
/// keys(old) \ keys(new). Single merge pass over the key-sorted views.
pub fn pairwise_diff(old: &Dump, new: &Dump) -> Result<DumpDiff, DiffError> {
    if old.identity_mode != new.identity_mode {
        return Err(DiffError::IdentityModeMismatch {
            left: old.identity_mode,
            right: new.identity_mode,
        });
    }
    let old_keyed = old.keyed_statements();
    let new_keyed = new.keyed_statements();
    let mut diff = DumpDiff {
        old_label: old.label.clone(),
        new_label: new.label.clone(),
        added: BTreeMap::new(),
        removed: BTreeMap::new(),
    };
    let (mut i, mut j) = (0, 0);
    while i < old_keyed.len() && j < new_keyed.len() {
        match old_keyed[i].0.cmp(&new_keyed[j].0) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                diff.removed
                    .insert(old_keyed[i].0.clone(), old_keyed[i].1.clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                diff.added
                    .insert(new_keyed[j].0.clone(), new_keyed[j].1.clone());
                j += 1;
            }
        }
    }
    for (key, stmt) in &old_keyed[i..] {
        diff.removed.insert(key.clone(), (*stmt).clone());
    }
    for (key, stmt) in &new_keyed[j..] {
        diff.added.insert(key.clone(), (*stmt).clone());
    }
    Ok(diff)
}

/// Fold the removal recurrence across a chronological dump sequence,
/// returning the ledger at the final dump together with every interval
/// diff. The ledger update per interval evicts re-added keys, then absorbs
/// the interval's removals.
pub fn accumulate_with_diffs(dumps: &[Dump]) -> Result<(RemovalLedger, Vec<DumpDiff>), DiffError> {
    let first = dumps.first().ok_or(DiffError::EmptySequence)?;
    let mode = first.identity_mode;
    for dump in dumps {
        if dump.identity_mode != mode {
            return Err(DiffError::IdentityModeMismatch {
                left: mode,
                right: dump.identity_mode,
            });
        }
    }
    let mut ledger = RemovalLedger {
        as_of: first.label.clone(),
        identity_mode: mode,
        entries: BTreeMap::new(),
    };
    let mut diffs = Vec::with_capacity(dumps.len().saturating_sub(1));
    for pair in dumps.windows(2) {
        let diff = pairwise_diff(&pair[0], &pair[1])?;
        for key in diff.added.keys() {
            ledger.entries.remove(key);
        }
        for (key, stmt) in &diff.removed {
            ledger.entries.insert(
                key.clone(),
                LedgerEntry {
                    statement: stmt.clone(),
                    removed_at: pair[1].label.clone(),
                },
            );
        }
        ledger.as_of = pair[1].label.clone();
        diffs.push(diff);
    }
    Ok((ledger, diffs))
}

/// The removal ledger at the final dump of a chronological sequence.
pub fn accumulate(dumps: &[Dump]) -> Result<RemovalLedger, DiffError> {
    accumulate_with_diffs(dumps).map(|(ledger, _)| ledger)
}

/// Merge redirect maps from successive dumps, last writer wins, then
/// collapse chains across the merged result.
pub fn merge_redirects<'a>(
    maps: impl IntoIterator<Item = &'a BTreeMap<String, String>>,
) -> BTreeMap<String, String> {
    let mut merged = BTreeMap::new();
    for map in maps {
        for (old, new) in map {
            merged.insert(old.clone(), new.clone());
        }
    }
    crate::model::collapse_redirects(&merged)
}

/// Redirect annotation over a removal ledger: how many removed statements
/// touch a redirected node, and the class breakdown for typing statements.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RedirectReport {
    pub total_entries: usize,
    pub redirected_subject: usize,
    pub redirected_object: usize,
    /// Entries with a redirected subject or object (or both).
    pub redirected_either: usize,
    /// Typing statements (per `instance_property`) with a redirected endpoint.
    pub redirected_typing_total: usize,
    /// Class of each redirected instance: typing statements whose subject
    /// was redirected, counted by object class.
    pub instance_classes: BTreeMap<String, usize>,
    /// Classes that were themselves redirected: typing statements whose
    /// object was redirected, counted by that object.
    pub redirected_classes: BTreeMap<String, usize>,
}

impl RedirectReport {
    /// Fraction of ledger entries with a redirected endpoint.
    pub fn redirected_fraction(&self) -> f64 {
        if self.total_entries == 0 {
            0.0
        } else {
            self.redirected_either as f64 / self.total_entries as f64
        }
    }

    /// Percentage of redirected typing statements accounted for by `count`.
    pub fn typing_percentage(&self, count: usize) -> f64 {
        if self.redirected_typing_total == 0 {
            0.0
        } else {
            100.0 * count as f64 / self.redirected_typing_total as f64
        }
    }
}

/// Count ledger statements whose subject or object node was redirected,
/// with a class breakdown for `instance_property` statements.
pub fn annotate_redirects(
    ledger: &RemovalLedger,
    redirects: &BTreeMap<String, String>,
    instance_property: &str,
) -> RedirectReport {
    let mut report = RedirectReport {
        total_entries: ledger.entries.len(),
        ..RedirectReport::default()
    };
    for entry in ledger.entries.values() {
        let stmt = &entry.statement;
        let subject_hit = redirects.contains_key(&stmt.subject);
        let object_hit = stmt.object.kind() == crate::model::LiteralKind::Entity
            && redirects.contains_key(stmt.object.canonical());
        if subject_hit {
            report.redirected_subject += 1;
        }
        if object_hit {
            report.redirected_object += 1;
        }
        if subject_hit || object_hit {
            report.redirected_either += 1;
            if stmt.property == instance_property {
                report.redirected_typing_total += 1;
                let class = stmt.object.canonical().to_string();
                if subject_hit {
                    *report.instance_classes.entry(class.clone()).or_insert(0) += 1;
                }
                if object_hit {
                    *report.redirected_classes.entry(class).or_insert(0) += 1;
                }
            }
        }
    }
    report
}

const LEDGER_SCHEMA: &str = "kgq-ledger-v1";

/// Write a ledger as a six-column table plus a `.meta` sidecar recording
/// the schema, final dump tag and identity mode. Qualifiers go to the
/// `*.quals.tsv` sibling.
pub fn write_ledger(path: &Path, ledger: &RemovalLedger) -> Result<(), DiffError> {
    let rows = ledger.entries.values().map(|entry| {
        let s = &entry.statement;
        vec![
            s.id.clone(),
            s.subject.clone(),
            s.property.clone(),
            s.object.raw().to_string(),
            s.rank.to_string(),
            entry.removed_at.clone(),
        ]
    });
    edge_io::write_tsv(
        path,
        &["id", "node1", "label", "node2", "rank", "removed_at"],
        rows,
    )?;

    let quals = edge_io::sibling_path(path, "quals");
    edge_io::write_qualifier_file(&quals, ledger.entries.values().map(|e| &e.statement))?;

    let meta_path = meta_path(path);
    let meta = format!(
        "schema={}\nas_of={}\nidentity_mode={}\n",
        LEDGER_SCHEMA, ledger.as_of, ledger.identity_mode
    );
    std::fs::write(&meta_path, meta).map_err(|source| {
        DiffError::Parse(ModelError::WriteIo {
            path: meta_path,
            source,
        })
    })?;
    Ok(())
}

fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta");
    path.with_file_name(name)
}

/// Read a ledger written by [`write_ledger`], reattaching qualifiers and
/// recomputing keys under the identity mode recorded in the sidecar.
pub fn read_ledger(path: &Path) -> Result<RemovalLedger, DiffError> {
    let meta_path = meta_path(path);
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|source| {
        DiffError::Parse(ModelError::Io {
            path: meta_path.clone(),
            source,
        })
    })?;
    let mut schema = None;
    let mut as_of = None;
    let mut identity_mode = None;
    for line in meta_text.lines() {
        match line.split_once('=') {
            Some(("schema", v)) => schema = Some(v.to_string()),
            Some(("as_of", v)) => as_of = Some(v.to_string()),
            Some(("identity_mode", v)) => identity_mode = Some(v.to_string()),
            _ => {}
        }
    }
    if schema.as_deref() != Some(LEDGER_SCHEMA) {
        return Err(DiffError::LedgerMeta {
            path: meta_path,
            detail: format!(
                "schema `{}` is not `{LEDGER_SCHEMA}`",
                schema.unwrap_or_default()
            ),
        });
    }
    let as_of = as_of.ok_or_else(|| DiffError::LedgerMeta {
        path: meta_path.clone(),
        detail: "missing as_of".to_string(),
    })?;
    let identity_mode: IdentityMode = identity_mode
        .ok_or_else(|| DiffError::LedgerMeta {
            path: meta_path.clone(),
            detail: "missing identity_mode".to_string(),
        })?
        .parse()
        .map_err(|detail| DiffError::LedgerMeta {
            path: meta_path.clone(),
            detail,
        })?;

    let mut lines = edge_io::open_lines(path)?;
    let header = match lines.next() {
        Some(line) => line.map_err(|source| {
            DiffError::Parse(ModelError::Io {
                path: path.to_path_buf(),
                source,
            })
        })?,
        None => {
            return Err(DiffError::Parse(ModelError::EmptyFile {
                path: path.to_path_buf(),
            }))
        }
    };
    let (cols, _) = edge_io::resolve_columns(
        path,
        &header,
        &["id", "node1", "label", "node2", "rank", "removed_at"],
        &[],
    )?;
    let mut statements = Vec::new();
    let mut removed_at_tags = Vec::new();
    for line in lines {
        let line = line.map_err(|source| {
            DiffError::Parse(ModelError::Io {
                path: path.to_path_buf(),
                source,
            })
        })?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.width {
            return Err(DiffError::LedgerMeta {
                path: path.to_path_buf(),
                detail: format!("row has {} columns, expected {}", fields.len(), cols.width),
            });
        }
        let rank = fields[cols.indices[4]].parse().unwrap_or_default();
        statements.push(
            Statement::new(
                fields[cols.indices[0]],
                fields[cols.indices[1]],
                fields[cols.indices[2]],
                fields[cols.indices[3]],
            )
            .with_rank(rank),
        );
        removed_at_tags.push(fields[cols.indices[5]].to_string());
    }

    let quals = edge_io::sibling_path(path, "quals");
    if quals.is_file() {
        edge_io::parse_qualifier_file(&quals, &mut statements)?;
    }

    let mut ledger = RemovalLedger {
        as_of,
        identity_mode,
        entries: BTreeMap::new(),
    };
    for (stmt, removed_at) in statements.into_iter().zip(removed_at_tags) {
        let key = stmt.key(identity_mode);
        ledger.entries.insert(
            key,
            LedgerEntry {
                statement: stmt,
                removed_at,
            },
        );
    }
    Ok(ledger)
}

/// Options for the streaming file diff.
#[derive(Clone, Debug)]
pub struct FileDiffOptions {
    pub identity_mode: IdentityMode,
    /// Sort buffer size in records; peak memory scales with this, not with
    /// input size.
    pub max_in_memory: usize,
    /// Parent directory for spill runs; system temp when unset.
    pub scratch: Option<PathBuf>,
}

impl Default for FileDiffOptions {
    fn default() -> FileDiffOptions {
        FileDiffOptions {
            identity_mode: IdentityMode::Content,
            max_in_memory: 500_000,
            scratch: None,
        }
    }
}

/// Counts and diagnostics from a streaming file diff.
#[derive(Clone, Debug, Default)]
pub struct FileDiffSummary {
    pub added: u64,
    pub removed: u64,
    pub issues: Vec<ParseIssue>,
}

/// Key-sorted, deduplicated statement stream. Equal keys collapse to the
/// statement with the smallest id.
struct KeyedStream<F>
where
    F: Fn(&Statement) -> StatementKey,
{
    inner: SortedStream<Statement, StatementKey, F>,
    mode: IdentityMode,
    pending: Option<(StatementKey, Statement)>,
}

impl<F> KeyedStream<F>
where
    F: Fn(&Statement) -> StatementKey,
{
    fn next_unique(&mut self) -> Result<Option<(StatementKey, Statement)>, SortError> {
        loop {
            match self.inner.next() {
                Some(Ok(stmt)) => {
                    let key = stmt.key(self.mode);
                    match &mut self.pending {
                        Some((pending_key, pending_stmt)) => {
                            if *pending_key == key {
                                if stmt.id < pending_stmt.id {
                                    *pending_stmt = stmt;
                                }
                            } else {
                                let done = self.pending.take();
                                self.pending = Some((key, stmt));
                                return Ok(done);
                            }
                        }
                        None => self.pending = Some((key, stmt)),
                    }
                }
                Some(Err(err)) => return Err(err),
                None => return Ok(self.pending.take()),
            }
        }
    }
}

fn sorted_stream(
    path: &Path,
    opts: &FileDiffOptions,
    issues: &mut Vec<ParseIssue>,
) -> Result<KeyedStream<impl Fn(&Statement) -> StatementKey>, DiffError> {
    let mode = opts.identity_mode;
    let mut sorter = ExternalSorter::new(move |s: &Statement| s.key(mode), opts.max_in_memory);
    if let Some(scratch) = &opts.scratch {
        sorter = sorter.with_scratch_parent(scratch);
    }
    let mut stream = EdgeStream::open(path)?;
    for stmt in stream.by_ref() {
        sorter.push(stmt?)?;
    }
    issues.extend(stream.into_issues());
    Ok(KeyedStream {
        inner: sorter.finish()?,
        mode,
        pending: None,
    })
}

/// Diff two edge files of arbitrary size, writing `added.tsv` and
/// `removed.tsv` into `out_dir`. Inputs are external-sorted by key, then
/// merged in a single pass, so memory is bounded by the sort buffer.
pub fn diff_files_to(
    old_path: &Path,
    new_path: &Path,
    out_dir: &Path,
    opts: &FileDiffOptions,
) -> Result<FileDiffSummary, DiffError> {
    std::fs::create_dir_all(out_dir).map_err(|source| {
        DiffError::Parse(ModelError::WriteIo {
            path: out_dir.to_path_buf(),
            source,
        })
    })?;
    let mut summary = FileDiffSummary::default();
    let mut old_stream = sorted_stream(old_path, opts, &mut summary.issues)?;
    let mut new_stream = sorted_stream(new_path, opts, &mut summary.issues)?;

    let mut added_out = EdgeWriter::create(&out_dir.join("added.tsv"))?;
    let mut removed_out = EdgeWriter::create(&out_dir.join("removed.tsv"))?;

    let mut old_head = old_stream.next_unique()?;
    let mut new_head = new_stream.next_unique()?;
    loop {
        match (&old_head, &new_head) {
            (None, None) => break,
            (Some((_, stmt)), None) => {
                removed_out.write(stmt)?;
                summary.removed += 1;
                old_head = old_stream.next_unique()?;
            }
            (None, Some((_, stmt))) => {
                added_out.write(stmt)?;
                summary.added += 1;
                new_head = new_stream.next_unique()?;
            }
            (Some((old_key, old_stmt)), Some((new_key, new_stmt))) => match old_key.cmp(new_key) {
                std::cmp::Ordering::Equal => {
                    old_head = old_stream.next_unique()?;
                    new_head = new_stream.next_unique()?;
                }
                std::cmp::Ordering::Less => {
                    removed_out.write(old_stmt)?;
                    summary.removed += 1;
                    old_head = old_stream.next_unique()?;
                }
                std::cmp::Ordering::Greater => {
                    added_out.write(new_stmt)?;
                    summary.added += 1;
                    new_head = new_stream.next_unique()?;
                }
            },
        }
    }
    added_out.finish()?;
    removed_out.finish()?;
    Ok(summary)
}
