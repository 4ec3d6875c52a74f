//! Property-constraint ingestion and validation.
//!
//! Constraints are declared in the graph itself: a declaration statement's
//! subject is the constrained property, its object names the constraint
//! type, and qualifiers carry the allowed classes, relation, required
//! property and values, exceptions, and status. Five constraint types are
//! supported: type, value-type, item-requires-statement, inverse, and
//! symmetric. Validation partitions each property's statements into
//! correct and incorrect, and summaries aggregate violation ratios per
//! constraint type and status.

mod closure;
mod ingest;
mod summary;
mod validate;

pub use closure::{build_closure, ClosureIndex};
pub use ingest::{ingest_constraints, read_specs, write_specs, IngestReport};
pub use summary::{violation_ratio_table, write_report_files, RankedRow, SummaryRow, SummaryTable};
pub use validate::{
    build_dump_index, validate_all, validate_inverse, validate_item_requires_statement,
    validate_symmetric, validate_type, validate_value_type, DumpIndex, ViolationReport,
};

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum ConstraintError {
    #[error(transparent)]
    Model(#[from] crate::model::edge_io::ModelError),
    #[error("{path}:{line}: bad constraint spec row: {detail}")]
    BadSpecRow {
        path: PathBuf,
        line: usize,
        detail: String,
    },
}

/// The five supported constraint types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintType {
    Type,
    ValueType,
    ItemRequiresStatement,
    Inverse,
    Symmetric,
}

impl ConstraintType {
    pub const ALL: [ConstraintType; 5] = [
        ConstraintType::Type,
        ConstraintType::ValueType,
        ConstraintType::ItemRequiresStatement,
        ConstraintType::Inverse,
        ConstraintType::Symmetric,
    ];
}

impl fmt::Display for ConstraintType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintType::Type => "type",
            ConstraintType::ValueType => "valuetype",
            ConstraintType::ItemRequiresStatement => "irs",
            ConstraintType::Inverse => "inverse",
            ConstraintType::Symmetric => "symmetric",
        };
        f.write_str(s)
    }
}

impl FromStr for ConstraintType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "type" => Ok(ConstraintType::Type),
            "valuetype" => Ok(ConstraintType::ValueType),
            "irs" => Ok(ConstraintType::ItemRequiresStatement),
            "inverse" => Ok(ConstraintType::Inverse),
            "symmetric" => Ok(ConstraintType::Symmetric),
            other => Err(format!(
                "unknown constraint type `{other}` (expected type|valuetype|irs|inverse|symmetric)"
            )),
        }
    }
}

/// Constraint enforcement level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintStatus {
    Mandatory,
    #[default]
    Normal,
    Suggested,
}

impl fmt::Display for ConstraintStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintStatus::Mandatory => "mandatory",
            ConstraintStatus::Normal => "normal",
            ConstraintStatus::Suggested => "suggested",
        };
        f.write_str(s)
    }
}

impl FromStr for ConstraintStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mandatory" => Ok(ConstraintStatus::Mandatory),
            "normal" | "" => Ok(ConstraintStatus::Normal),
            "suggested" => Ok(ConstraintStatus::Suggested),
            other => Err(format!(
                "unknown constraint status `{other}` (expected mandatory|normal|suggested)"
            )),
        }
    }
}

/// How class membership is tested for type and value-type constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationMode {
    #[default]
    InstanceOf,
    SubclassOf,
    InstanceOrSubclass,
}

impl fmt::Display for RelationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelationMode::InstanceOf => "instance_of",
            RelationMode::SubclassOf => "subclass_of",
            RelationMode::InstanceOrSubclass => "instance_or_subclass",
        };
        f.write_str(s)
    }
}

impl FromStr for RelationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "instance_of" => Ok(RelationMode::InstanceOf),
            "subclass_of" => Ok(RelationMode::SubclassOf),
            "instance_or_subclass" => Ok(RelationMode::InstanceOrSubclass),
            other => Err(format!(
                "unknown relation mode `{other}` (expected instance_of|subclass_of|instance_or_subclass)"
            )),
        }
    }
}

/// One compiled constraint. Fields irrelevant to the constraint type stay
/// empty: only type and value-type constraints carry allowed classes and a
/// relation mode; only item-requires-statement and inverse constraints
/// carry a required property; required values apply to
/// item-requires-statement only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSpec {
    pub property: String,
    pub ctype: ConstraintType,
    pub status: ConstraintStatus,
    pub allowed_classes: BTreeSet<String>,
    pub relation_mode: RelationMode,
    pub required_property: String,
    pub required_values: BTreeSet<String>,
    pub exceptions: BTreeSet<String>,
}

impl ConstraintSpec {
    fn bare(property: &str, ctype: ConstraintType, status: ConstraintStatus) -> ConstraintSpec {
        ConstraintSpec {
            property: property.to_string(),
            ctype,
            status,
            allowed_classes: BTreeSet::new(),
            relation_mode: RelationMode::default(),
            required_property: String::new(),
            required_values: BTreeSet::new(),
            exceptions: BTreeSet::new(),
        }
    }

    /// Type constraint: subjects must be instances (or subclasses, per
    /// `relation_mode`) of an allowed class.
    pub fn type_constraint(
        property: &str,
        allowed_classes: impl IntoIterator<Item = impl Into<String>>,
        relation_mode: RelationMode,
        status: ConstraintStatus,
    ) -> ConstraintSpec {
        let mut spec = ConstraintSpec::bare(property, ConstraintType::Type, status);
        spec.allowed_classes = allowed_classes.into_iter().map(Into::into).collect();
        spec.relation_mode = relation_mode;
        spec
    }

    /// Value-type constraint: the same class test applied to object nodes.
    pub fn value_type_constraint(
        property: &str,
        allowed_classes: impl IntoIterator<Item = impl Into<String>>,
        relation_mode: RelationMode,
        status: ConstraintStatus,
    ) -> ConstraintSpec {
        let mut spec = ConstraintSpec::bare(property, ConstraintType::ValueType, status);
        spec.allowed_classes = allowed_classes.into_iter().map(Into::into).collect();
        spec.relation_mode = relation_mode;
        spec
    }

    /// Item-requires-statement constraint: subjects must also carry a
    /// statement with `required_property`, optionally restricted to
    /// `required_values` (empty means any value).
    pub fn irs_constraint(
        property: &str,
        required_property: &str,
        required_values: impl IntoIterator<Item = impl Into<String>>,
        status: ConstraintStatus,
    ) -> ConstraintSpec {
        let mut spec =
            ConstraintSpec::bare(property, ConstraintType::ItemRequiresStatement, status);
        spec.required_property = required_property.to_string();
        spec.required_values = required_values.into_iter().map(Into::into).collect();
        spec
    }

    /// Inverse constraint: for (s, p, o) the statement (o, required, s)
    /// must exist.
    pub fn inverse_constraint(
        property: &str,
        required_property: &str,
        status: ConstraintStatus,
    ) -> ConstraintSpec {
        let mut spec = ConstraintSpec::bare(property, ConstraintType::Inverse, status);
        spec.required_property = required_property.to_string();
        spec
    }

    /// Symmetric constraint: for (s, p, o) the statement (o, p, s) must
    /// exist.
    pub fn symmetric_constraint(property: &str, status: ConstraintStatus) -> ConstraintSpec {
        ConstraintSpec::bare(property, ConstraintType::Symmetric, status)
    }

    pub fn with_exceptions(
        mut self,
        exceptions: impl IntoIterator<Item = impl Into<String>>,
    ) -> ConstraintSpec {
        self.exceptions = exceptions.into_iter().map(Into::into).collect();
        self
    }

    /// Short disambiguator for properties carrying several constraints.
    pub fn tag(&self) -> String {
        match self.ctype {
            ConstraintType::ItemRequiresStatement | ConstraintType::Inverse => {
                if self.required_values.is_empty() {
                    format!("{}:{}", self.ctype, self.required_property)
                } else {
                    format!(
                        "{}:{}={}",
                        self.ctype,
                        self.required_property,
                        join_set(&self.required_values)
                    )
                }
            }
            _ => self.ctype.to_string(),
        }
    }
}

pub(crate) fn join_set(set: &BTreeSet<String>) -> String {
    set.iter().cloned().collect::<Vec<_>>().join(";")
}

pub(crate) fn split_set(field: &str) -> BTreeSet<String> {
    field
        .split(';')
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Which graph vocabulary encodes constraint declarations. The defaults
/// follow Wikidata's live vocabulary, but nothing is hard-coded: a graph
/// using different property ids configures them here.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleConfig {
    /// Property whose statements declare constraints.
    pub declaration_property: String,
    /// Qualifier roles on a declaration statement.
    pub allowed_class: String,
    pub relation: String,
    pub required_property: String,
    pub required_value: String,
    pub exception: String,
    pub status: String,
    /// Object values naming the five constraint types.
    pub type_constraint: String,
    pub value_type_constraint: String,
    pub irs_constraint: String,
    pub inverse_constraint: String,
    pub symmetric_constraint: String,
    /// Relation-qualifier values.
    pub relation_instance_of: String,
    pub relation_subclass_of: String,
    pub relation_instance_or_subclass: String,
    /// Status-qualifier values; a missing status qualifier means normal.
    pub status_mandatory: String,
    pub status_suggested: String,
    /// Edges declaring property datatypes, for external-identifier
    /// detection.
    pub datatype_property: String,
    pub external_id_datatype: String,
    /// Taxonomy properties.
    pub instance_property: String,
    pub subclass_property: String,
}

impl Default for RoleConfig {
    fn default() -> RoleConfig {
        RoleConfig {
            declaration_property: "P2302".to_string(),
            allowed_class: "P2308".to_string(),
            relation: "P2309".to_string(),
            required_property: "P2306".to_string(),
            required_value: "P2305".to_string(),
            exception: "P2303".to_string(),
            status: "P2316".to_string(),
            type_constraint: "Q21503250".to_string(),
            value_type_constraint: "Q21510865".to_string(),
            irs_constraint: "Q21503247".to_string(),
            inverse_constraint: "Q21510855".to_string(),
            symmetric_constraint: "Q21510862".to_string(),
            relation_instance_of: "Q21503252".to_string(),
            relation_subclass_of: "Q21514624".to_string(),
            relation_instance_or_subclass: "Q30208840".to_string(),
            status_mandatory: "Q21502408".to_string(),
            status_suggested: "Q62026391".to_string(),
            datatype_property: "datatype".to_string(),
            external_id_datatype: "external-id".to_string(),
            instance_property: "P31".to_string(),
            subclass_property: "P279".to_string(),
        }
    }
}
