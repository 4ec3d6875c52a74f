//! Statement, qualifier and dump data model plus the edge-file format.

pub mod edge_io;
mod literal;

pub use literal::{DateParts, LiteralKind, LiteralValue};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Statement rank. Defaults to `Normal` when absent from input.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Rank {
    Preferred,
    #[default]
    Normal,
    Deprecated,
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rank::Preferred => "preferred",
            Rank::Normal => "normal",
            Rank::Deprecated => "deprecated",
        };
        f.write_str(s)
    }
}

impl FromStr for Rank {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preferred" => Ok(Rank::Preferred),
            "normal" | "" => Ok(Rank::Normal),
            "deprecated" => Ok(Rank::Deprecated),
            _ => Err(()),
        }
    }
}

/// One qualifier pair attached to a statement.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Qualifier {
    pub property: String,
    pub value: LiteralValue,
}

/// One hyperrelational edge: subject, property, object plus qualifier pairs
/// and a rank. Qualifier pairs are unordered and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub id: String,
    pub subject: String,
    pub property: String,
    pub object: LiteralValue,
    pub rank: Rank,
    pub qualifiers: BTreeSet<Qualifier>,
}

impl Statement {
    pub fn new(id: &str, subject: &str, property: &str, object: &str) -> Statement {
        Statement {
            id: id.to_string(),
            subject: subject.to_string(),
            property: property.to_string(),
            object: LiteralValue::parse(object),
            rank: Rank::Normal,
            qualifiers: BTreeSet::new(),
        }
    }

    pub fn with_rank(mut self, rank: Rank) -> Statement {
        self.rank = rank;
        self
    }

    pub fn with_qualifier(mut self, property: &str, value: &str) -> Statement {
        self.qualifiers.insert(Qualifier {
            property: property.to_string(),
            value: LiteralValue::parse(value),
        });
        self
    }

    /// Canonical key of this statement under the given identity mode.
    pub fn key(&self, mode: IdentityMode) -> StatementKey {
        StatementKey::of(self, mode)
    }
}

/// How statements are identified in set operations.
///
/// `Content` keys a statement by `(subject, property, canonical object)`,
/// so qualifier-only edits and literal surface-form changes do not register
/// as removals. `Id` keys by the opaque statement id.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum IdentityMode {
    #[default]
    Content,
    Id,
}

impl fmt::Display for IdentityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentityMode::Content => f.write_str("content"),
            IdentityMode::Id => f.write_str("id"),
        }
    }
}

impl FromStr for IdentityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "content" => Ok(IdentityMode::Content),
            "id" => Ok(IdentityMode::Id),
            other => Err(format!(
                "unknown identity mode `{other}` (expected content|id)"
            )),
        }
    }
}

/// Canonical statement key. Ordering is lexicographic on the encoded form,
/// which groups content keys by subject, then property, then object.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StatementKey(String);

impl StatementKey {
    pub fn of(stmt: &Statement, mode: IdentityMode) -> StatementKey {
        match mode {
            IdentityMode::Content => StatementKey(format!(
                "{}\t{}\t{}",
                stmt.subject,
                stmt.property,
                stmt.object.canonical()
            )),
            IdentityMode::Id => StatementKey(stmt.id.clone()),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Key from a precomputed string, for test tables keyed by statements
    /// that are not rematerialized.
    #[cfg(test)]
    pub(crate) fn raw(key: impl Into<String>) -> StatementKey {
        StatementKey(key.into())
    }
}

impl fmt::Display for StatementKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical key of a statement; free-function form of [`Statement::key`].
pub fn statement_key(stmt: &Statement, mode: IdentityMode) -> StatementKey {
    StatementKey::of(stmt, mode)
}

/// A full snapshot of the graph at one point in time.
#[derive(Clone, Debug, Default)]
pub struct Dump {
    pub label: String,
    pub statements: Vec<Statement>,
    /// Old node id -> new node id, chain-collapsed on load.
    pub redirects: BTreeMap<String, String>,
    pub identity_mode: IdentityMode,
}

impl Dump {
    pub fn new(label: &str, mode: IdentityMode) -> Dump {
        Dump {
            label: label.to_string(),
            statements: Vec::new(),
            redirects: BTreeMap::new(),
            identity_mode: mode,
        }
    }

    /// The dump's statement-key set under its identity mode.
    pub fn key_set(&self) -> BTreeSet<StatementKey> {
        self.statements
            .iter()
            .map(|s| s.key(self.identity_mode))
            .collect()
    }

    /// Statements sorted by `(key, id)` with duplicate keys removed; the
    /// lexicographically smallest id wins. This is the view every set
    /// operation works on.
    pub fn keyed_statements(&self) -> Vec<(StatementKey, &Statement)> {
        let mut keyed: Vec<(StatementKey, &Statement)> = self
            .statements
            .iter()
            .map(|s| (s.key(self.identity_mode), s))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
        keyed.dedup_by(|a, b| a.0 == b.0);
        keyed
    }

    /// Map subject -> classes for a given typing property (usually `P31`).
    pub fn instance_index(&self, instance_property: &str) -> BTreeMap<String, BTreeSet<String>> {
        let mut index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for stmt in &self.statements {
            if stmt.property == instance_property && stmt.object.kind() == LiteralKind::Entity {
                index
                    .entry(stmt.subject.clone())
                    .or_default()
                    .insert(stmt.object.canonical().to_string());
            }
        }
        index
    }

    /// Attach a redirect map: collapses chains, breaks cycles at their
    /// smallest member, and drops entries whose source also appears as a
    /// statement subject in this dump. Returns the number of dropped
    /// conflicting entries.
    pub fn set_redirects(&mut self, raw: BTreeMap<String, String>) -> usize {
        let subjects: BTreeSet<&str> = self.statements.iter().map(|s| s.subject.as_str()).collect();
        let collapsed = collapse_redirects(&raw);
        let mut dropped = 0;
        self.redirects = collapsed
            .into_iter()
            .filter(|(old, _)| {
                if subjects.contains(old.as_str()) {
                    dropped += 1;
                    false
                } else {
                    true
                }
            })
            .collect();
        dropped
    }
}

/// Collapse redirect chains so one lookup resolves every source. Members of
/// a cycle all map to the smallest id in the cycle, whose own entry is
/// removed.
pub fn collapse_redirects(raw: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    let mut collapsed = BTreeMap::new();
    for start in raw.keys() {
        let mut seen = vec![start.as_str()];
        let mut cursor = start.as_str();
        let target = loop {
            match raw.get(cursor) {
                Some(next) if seen.contains(&next.as_str()) => {
                    // Cycle: canonical member is the smallest id in it.
                    let cycle_start = seen.iter().position(|n| n == &next.as_str()).unwrap();
                    break seen[cycle_start..].iter().min().unwrap().to_string();
                }
                Some(next) => {
                    seen.push(next.as_str());
                    cursor = next.as_str();
                }
                None => break cursor.to_string(),
            }
        };
        if *start != target {
            collapsed.insert(start.clone(), target);
        }
    }
    collapsed
}
