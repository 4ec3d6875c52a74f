//! Readers and writers for the tab-separated edge, qualifier and redirect
//! file formats.
//!
//! Edge files carry one statement per row under an `id node1 label node2`
//! header, with an optional trailing `rank` column. Qualifier files attach
//! `node1 label node2` rows to statements by id, and redirect files map an
//! old node id to its replacement. All readers collect recoverable problems
//! as [`ParseIssue`]s instead of failing; only structural defects such as a
//! missing required column abort the load.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::model::{Dump, IdentityMode, LiteralValue, Qualifier, Rank, Statement};

/// Structural errors that abort a load.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    WriteIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: file is empty, expected a header row")]
    EmptyFile { path: PathBuf },
}

/// A recoverable problem found while reading a file. The offending row is
/// skipped or repaired; the issue records what happened.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ParseIssue {
    /// Row has the wrong number of columns or an empty required field.
    MalformedRow {
        path: String,
        line: usize,
        detail: String,
    },
    /// Qualifier row references a statement id not present in the edge file.
    DanglingQualifier {
        path: String,
        line: usize,
        statement_id: String,
    },
    /// A statement id appeared more than once; the first occurrence wins.
    DuplicateId {
        path: String,
        line: usize,
        id: String,
    },
    /// Rank value was not preferred/normal/deprecated; normal was assumed.
    UnknownRank {
        path: String,
        line: usize,
        rank: String,
    },
}

impl ParseIssue {
    pub fn kind(&self) -> &'static str {
        match self {
            ParseIssue::MalformedRow { .. } => "malformed_row",
            ParseIssue::DanglingQualifier { .. } => "dangling_qualifier",
            ParseIssue::DuplicateId { .. } => "duplicate_id",
            ParseIssue::UnknownRank { .. } => "unknown_rank",
        }
    }
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseIssue::MalformedRow { path, line, detail } => {
                write!(f, "{path}:{line}: malformed row: {detail}")
            }
            ParseIssue::DanglingQualifier {
                path,
                line,
                statement_id,
            } => {
                write!(
                    f,
                    "{path}:{line}: qualifier references unknown statement `{statement_id}`"
                )
            }
            ParseIssue::DuplicateId { path, line, id } => {
                write!(
                    f,
                    "{path}:{line}: duplicate statement id `{id}`, keeping first"
                )
            }
            ParseIssue::UnknownRank { path, line, rank } => {
                write!(f, "{path}:{line}: unknown rank `{rank}`, assuming normal")
            }
        }
    }
}

/// Column positions resolved from a header row.
pub(crate) struct Columns {
    pub(crate) indices: Vec<usize>,
    pub(crate) width: usize,
}

pub(crate) fn resolve_columns(
    path: &Path,
    header: &str,
    required: &[&str],
    optional: &[&str],
) -> Result<(Columns, Vec<Option<usize>>), ModelError> {
    let names: Vec<&str> = header.split('\t').map(str::trim).collect();
    let mut indices = Vec::with_capacity(required.len());
    for col in required {
        match names.iter().position(|n| n == col) {
            Some(i) => indices.push(i),
            None => {
                return Err(ModelError::MissingColumn {
                    path: path.to_path_buf(),
                    column: col.to_string(),
                })
            }
        }
    }
    let opt = optional
        .iter()
        .map(|col| names.iter().position(|n| n == col))
        .collect();
    Ok((
        Columns {
            indices,
            width: names.len(),
        },
        opt,
    ))
}

pub(crate) fn open_lines(path: &Path) -> Result<std::io::Lines<BufReader<File>>, ModelError> {
    let file = File::open(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BufReader::new(file).lines())
}

/// Read an edge file into statements. The header must name `id`, `node1`,
/// `label` and `node2`; a `rank` column is honored when present.
pub fn parse_edge_file(path: &Path) -> Result<(Vec<Statement>, Vec<ParseIssue>), ModelError> {
    let mut lines = open_lines(path)?;
    let header = match lines.next() {
        Some(line) => line.map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => {
            return Err(ModelError::EmptyFile {
                path: path.to_path_buf(),
            })
        }
    };
    let (cols, opt) =
        resolve_columns(path, &header, &["id", "node1", "label", "node2"], &["rank"])?;
    let rank_col = opt[0];
    let shown = path.display().to_string();

    let mut statements = Vec::new();
    let mut issues = Vec::new();
    let mut seen_ids: std::collections::HashSet<String> = std::collections::HashSet::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let row_no = lineno + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.width {
            issues.push(ParseIssue::MalformedRow {
                path: shown.clone(),
                line: row_no,
                detail: format!("expected {} columns, found {}", cols.width, fields.len()),
            });
            continue;
        }
        let id = fields[cols.indices[0]].trim();
        let subject = fields[cols.indices[1]].trim();
        let property = fields[cols.indices[2]].trim();
        let object = fields[cols.indices[3]];
        if id.is_empty() || subject.is_empty() || property.is_empty() || object.trim().is_empty() {
            issues.push(ParseIssue::MalformedRow {
                path: shown.clone(),
                line: row_no,
                detail: "empty id, node1, label or node2 field".to_string(),
            });
            continue;
        }
        if !seen_ids.insert(id.to_string()) {
            issues.push(ParseIssue::DuplicateId {
                path: shown.clone(),
                line: row_no,
                id: id.to_string(),
            });
            continue;
        }
        let rank = match rank_col {
            Some(i) => {
                let raw = fields[i].trim();
                match raw.parse::<Rank>() {
                    Ok(rank) => rank,
                    Err(()) => {
                        issues.push(ParseIssue::UnknownRank {
                            path: shown.clone(),
                            line: row_no,
                            rank: raw.to_string(),
                        });
                        Rank::Normal
                    }
                }
            }
            None => Rank::Normal,
        };
        statements.push(Statement {
            id: id.to_string(),
            subject: subject.to_string(),
            property: property.to_string(),
            object: LiteralValue::parse(object),
            rank,
            qualifiers: std::collections::BTreeSet::new(),
        });
    }
    Ok((statements, issues))
}

/// Read a qualifier file and attach its rows to the matching statements.
/// `node1` names the statement id each qualifier belongs to.
pub fn parse_qualifier_file(
    path: &Path,
    statements: &mut [Statement],
) -> Result<Vec<ParseIssue>, ModelError> {
    let mut lines = open_lines(path)?;
    let header = match lines.next() {
        Some(line) => line.map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => {
            return Err(ModelError::EmptyFile {
                path: path.to_path_buf(),
            })
        }
    };
    let (cols, _) = resolve_columns(path, &header, &["node1", "label", "node2"], &[])?;
    let shown = path.display().to_string();

    let by_id: BTreeMap<String, usize> = statements
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.clone(), i))
        .collect();

    let mut issues = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let row_no = lineno + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.width {
            issues.push(ParseIssue::MalformedRow {
                path: shown.clone(),
                line: row_no,
                detail: format!("expected {} columns, found {}", cols.width, fields.len()),
            });
            continue;
        }
        let stmt_id = fields[cols.indices[0]].trim();
        let property = fields[cols.indices[1]].trim();
        let value = fields[cols.indices[2]];
        if stmt_id.is_empty() || property.is_empty() || value.trim().is_empty() {
            issues.push(ParseIssue::MalformedRow {
                path: shown.clone(),
                line: row_no,
                detail: "empty node1, label or node2 field".to_string(),
            });
            continue;
        }
        match by_id.get(stmt_id) {
            Some(&i) => {
                statements[i].qualifiers.insert(Qualifier {
                    property: property.to_string(),
                    value: LiteralValue::parse(value),
                });
            }
            None => issues.push(ParseIssue::DanglingQualifier {
                path: shown.clone(),
                line: row_no,
                statement_id: stmt_id.to_string(),
            }),
        }
    }
    Ok(issues)
}

/// Read a redirect file mapping old node ids (`node1`) to their replacement
/// (`node2`). Chains are not collapsed here; [`Dump::set_redirects`] does.
pub fn parse_redirect_file(
    path: &Path,
) -> Result<(BTreeMap<String, String>, Vec<ParseIssue>), ModelError> {
    let mut lines = open_lines(path)?;
    let header = match lines.next() {
        Some(line) => line.map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => {
            return Err(ModelError::EmptyFile {
                path: path.to_path_buf(),
            })
        }
    };
    let (cols, _) = resolve_columns(path, &header, &["node1", "node2"], &[])?;
    let shown = path.display().to_string();

    let mut redirects = BTreeMap::new();
    let mut issues = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let row_no = lineno + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.width {
            issues.push(ParseIssue::MalformedRow {
                path: shown.clone(),
                line: row_no,
                detail: format!("expected {} columns, found {}", cols.width, fields.len()),
            });
            continue;
        }
        let old = fields[cols.indices[0]].trim();
        let new = fields[cols.indices[1]].trim();
        if old.is_empty() || new.is_empty() || old == new {
            issues.push(ParseIssue::MalformedRow {
                path: shown.clone(),
                line: row_no,
                detail: "empty or self-referential redirect".to_string(),
            });
            continue;
        }
        redirects.insert(old.to_string(), new.to_string());
    }
    Ok((redirects, issues))
}

/// Streaming edge-file reader for inputs too large to hold in memory.
///
/// Yields statements row by row; row-level problems accumulate in
/// [`EdgeStream::issues`] as encountered. Unlike [`parse_edge_file`] this
/// reader does not detect duplicate ids, since that would require
/// remembering every id seen. Qualifier siblings are not consulted.
pub struct EdgeStream {
    lines: std::io::Lines<BufReader<File>>,
    cols: Columns,
    rank_col: Option<usize>,
    shown: String,
    path: PathBuf,
    row_no: usize,
    issues: Vec<ParseIssue>,
}

impl EdgeStream {
    pub fn open(path: &Path) -> Result<EdgeStream, ModelError> {
        let mut lines = open_lines(path)?;
        let header = match lines.next() {
            Some(line) => line.map_err(|source| ModelError::Io {
                path: path.to_path_buf(),
                source,
            })?,
            None => {
                return Err(ModelError::EmptyFile {
                    path: path.to_path_buf(),
                })
            }
        };
        let (cols, opt) =
            resolve_columns(path, &header, &["id", "node1", "label", "node2"], &["rank"])?;
        Ok(EdgeStream {
            lines,
            cols,
            rank_col: opt[0],
            shown: path.display().to_string(),
            path: path.to_path_buf(),
            row_no: 1,
            issues: Vec::new(),
        })
    }

    /// Problems seen so far; complete once the iterator is exhausted.
    pub fn issues(&self) -> &[ParseIssue] {
        &self.issues
    }

    pub fn into_issues(self) -> Vec<ParseIssue> {
        self.issues
    }
}

impl Iterator for EdgeStream {
    type Item = Result<Statement, ModelError>;

    fn next(&mut self) -> Option<Result<Statement, ModelError>> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(source) => {
                    return Some(Err(ModelError::Io {
                        path: self.path.clone(),
                        source,
                    }))
                }
            };
            self.row_no += 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != self.cols.width {
                self.issues.push(ParseIssue::MalformedRow {
                    path: self.shown.clone(),
                    line: self.row_no,
                    detail: format!(
                        "expected {} columns, found {}",
                        self.cols.width,
                        fields.len()
                    ),
                });
                continue;
            }
            let id = fields[self.cols.indices[0]].trim();
            let subject = fields[self.cols.indices[1]].trim();
            let property = fields[self.cols.indices[2]].trim();
            let object = fields[self.cols.indices[3]];
            if id.is_empty()
                || subject.is_empty()
                || property.is_empty()
                || object.trim().is_empty()
            {
                self.issues.push(ParseIssue::MalformedRow {
                    path: self.shown.clone(),
                    line: self.row_no,
                    detail: "empty id, node1, label or node2 field".to_string(),
                });
                continue;
            }
            let rank = match self.rank_col {
                Some(i) => {
                    let raw = fields[i].trim();
                    match raw.parse::<Rank>() {
                        Ok(rank) => rank,
                        Err(()) => {
                            self.issues.push(ParseIssue::UnknownRank {
                                path: self.shown.clone(),
                                line: self.row_no,
                                rank: raw.to_string(),
                            });
                            Rank::Normal
                        }
                    }
                }
                None => Rank::Normal,
            };
            return Some(Ok(Statement {
                id: id.to_string(),
                subject: subject.to_string(),
                property: property.to_string(),
                object: LiteralValue::parse(object),
                rank,
                qualifiers: std::collections::BTreeSet::new(),
            }));
        }
    }
}

/// Stream a file through sha256. Returns the lowercase hex digest and the
/// file size in bytes.
pub fn sha256_file(path: &Path) -> std::io::Result<(String, u64)> {
    use sha2::Digest as _;
    let mut file = File::open(path)?;
    let mut hasher = sha2::Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut bytes = 0u64;
    loop {
        let n = std::io::Read::read(&mut file, &mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    let digest = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok((digest, bytes))
}

/// Sibling path convention: `foo.tsv` keeps its qualifiers in
/// `foo.quals.tsv` and its redirects in `foo.redirects.tsv`.
pub fn sibling_path(edge_path: &Path, suffix: &str) -> PathBuf {
    edge_path.with_extension(format!("{suffix}.tsv"))
}

/// Load a dump from an edge file plus optional `*.quals.tsv` and
/// `*.redirects.tsv` siblings. The label defaults to the file stem.
pub fn load_dump(
    edge_path: &Path,
    mode: IdentityMode,
) -> Result<(Dump, Vec<ParseIssue>), ModelError> {
    let (mut statements, mut issues) = parse_edge_file(edge_path)?;

    let quals = sibling_path(edge_path, "quals");
    if quals.is_file() {
        issues.extend(parse_qualifier_file(&quals, &mut statements)?);
    }

    let label = edge_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| edge_path.display().to_string());
    let mut dump = Dump {
        label,
        statements,
        redirects: BTreeMap::new(),
        identity_mode: mode,
    };

    let redirects = sibling_path(edge_path, "redirects");
    if redirects.is_file() {
        let (raw, redirect_issues) = parse_redirect_file(&redirects)?;
        issues.extend(redirect_issues);
        dump.set_redirects(raw);
    }

    Ok((dump, issues))
}

fn sanitize(field: &str) -> String {
    // Tabs and newlines are the format's structure; values never legally
    // contain them, so any that slip in are flattened to spaces.
    field.replace(['\t', '\n', '\r'], " ")
}

/// Incremental edge-file writer with the full five-column header.
pub struct EdgeWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl EdgeWriter {
    pub fn create(path: &Path) -> Result<EdgeWriter, ModelError> {
        let file = File::create(path).map_err(|source| ModelError::WriteIo {
            path: path.to_path_buf(),
            source,
        })?;
        let mut writer = EdgeWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        };
        writer.write_line("id\tnode1\tlabel\tnode2\trank")?;
        Ok(writer)
    }

    fn write_line(&mut self, line: &str) -> Result<(), ModelError> {
        writeln!(self.out, "{line}").map_err(|source| ModelError::WriteIo {
            path: self.path.clone(),
            source,
        })
    }

    pub fn write(&mut self, stmt: &Statement) -> Result<(), ModelError> {
        let line = format!(
            "{}\t{}\t{}\t{}\t{}",
            sanitize(&stmt.id),
            sanitize(&stmt.subject),
            sanitize(&stmt.property),
            sanitize(stmt.object.raw()),
            stmt.rank
        );
        self.write_line(&line)
    }

    pub fn finish(mut self) -> Result<(), ModelError> {
        self.out.flush().map_err(|source| ModelError::WriteIo {
            path: self.path.clone(),
            source,
        })
    }
}

/// Write statements as an edge file with the full five-column header.
pub fn write_edge_file<'a>(
    path: &Path,
    statements: impl IntoIterator<Item = &'a Statement>,
) -> Result<(), ModelError> {
    let mut writer = EdgeWriter::create(path)?;
    for stmt in statements {
        writer.write(stmt)?;
    }
    writer.finish()
}

/// Write the qualifiers of the given statements as a qualifier file.
pub fn write_qualifier_file<'a>(
    path: &Path,
    statements: impl IntoIterator<Item = &'a Statement>,
) -> Result<(), ModelError> {
    let rows = statements.into_iter().flat_map(|s| {
        s.qualifiers
            .iter()
            .map(|q| vec![s.id.clone(), q.property.clone(), q.value.raw().to_string()])
    });
    write_tsv(path, &["node1", "label", "node2"], rows)
}

/// Write a generic tab-separated file with a header row.
pub fn write_tsv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), ModelError> {
    let file = File::create(path).map_err(|source| ModelError::WriteIo {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    let io_err = |source| ModelError::WriteIo {
        path: path.to_path_buf(),
        source,
    };
    writeln!(out, "{}", header.join("\t")).map_err(io_err)?;
    for row in rows {
        let row: Vec<String> = row.iter().map(|f| sanitize(f)).collect();
        writeln!(out, "{}", row.join("\t")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

/// Write parse issues as a diagnostic table.
pub fn write_issue_file(path: &Path, issues: &[ParseIssue]) -> Result<(), ModelError> {
    let rows = issues.iter().map(|issue| {
        let (file, line, detail) = match issue {
            ParseIssue::MalformedRow { path, line, detail } => {
                (path.clone(), *line, detail.clone())
            }
            ParseIssue::DanglingQualifier {
                path,
                line,
                statement_id,
            } => (
                path.clone(),
                *line,
                format!("statement `{statement_id}` not found"),
            ),
            ParseIssue::DuplicateId { path, line, id } => (
                path.clone(),
                *line,
                format!("id `{id}` repeated, first kept"),
            ),
            ParseIssue::UnknownRank { path, line, rank } => (
                path.clone(),
                *line,
                format!("rank `{rank}` unknown, assumed normal"),
            ),
        };
        vec![issue.kind().to_string(), file, line.to_string(), detail]
    });
    write_tsv(path, &["kind", "file", "line", "detail"], rows)
}
