//! Compiling constraint declarations found in a dump into constraint
//! specs.
//!
//! A declaration is a statement whose property is the configured
//! declaration property: its subject is the constrained property, its
//! object names the constraint type, and its qualifiers carry the roles.
//! Declarations of unsupported types and declarations on
//! external-identifier properties are skipped and counted, never fatal.
//! Malformed declarations (unknown relation value, a type constraint
//! without allowed classes, a requirement constraint without a required
//! property) are likewise skipped with a recorded warning.

use std::collections::BTreeSet;
use std::path::Path;

use crate::model::edge_io::{open_lines, resolve_columns, write_tsv, ModelError};
use crate::model::{Dump, LiteralKind, LiteralValue, Statement};

use super::{
    join_set, split_set, ConstraintError, ConstraintSpec, ConstraintStatus, ConstraintType,
    RelationMode, RoleConfig,
};

/// Compiled specs plus counters for everything that was skipped.
#[derive(Clone, Debug, Default)]
pub struct IngestReport {
    pub specs: Vec<ConstraintSpec>,
    /// Declarations of constraint types outside the supported five.
    pub skipped_unsupported: usize,
    /// Declarations on external-identifier properties.
    pub skipped_external_id: usize,
    /// Type or value-type declarations with no allowed classes.
    pub skipped_missing_classes: usize,
    /// Declarations whose relation qualifier has an unrecognized value.
    pub skipped_unknown_relation: usize,
    /// Requirement declarations missing their required property.
    pub skipped_malformed: usize,
    pub issues: Vec<String>,
}

impl IngestReport {
    pub fn skipped_total(&self) -> usize {
        self.skipped_unsupported
            + self.skipped_external_id
            + self.skipped_missing_classes
            + self.skipped_unknown_relation
            + self.skipped_malformed
    }
}

fn entity_values<'a>(stmt: &'a Statement, role: &'a str) -> impl Iterator<Item = &'a str> {
    stmt.qualifiers
        .iter()
        .filter(move |q| q.property == role && q.value.kind() == LiteralKind::Entity)
        .map(|q| q.value.canonical())
}

fn first_value<'a>(stmt: &'a Statement, role: &str) -> Option<&'a LiteralValue> {
    stmt.qualifiers
        .iter()
        .find(|q| q.property == role)
        .map(|q| &q.value)
}

/// Compile every declaration in the dump into a spec set, deterministically
/// ordered and deduplicated.
pub fn ingest_constraints(dump: &Dump, config: &RoleConfig) -> IngestReport {
    let mut report = IngestReport::default();

    let external_ids: BTreeSet<&str> = dump
        .statements
        .iter()
        .filter(|s| {
            s.property == config.datatype_property
                && s.object.canonical() == config.external_id_datatype
        })
        .map(|s| s.subject.as_str())
        .collect();

    for stmt in &dump.statements {
        if stmt.property != config.declaration_property {
            continue;
        }
        if external_ids.contains(stmt.subject.as_str()) {
            report.skipped_external_id += 1;
            continue;
        }
        let declared = stmt.object.canonical();
        let ctype = if declared == config.type_constraint {
            ConstraintType::Type
        } else if declared == config.value_type_constraint {
            ConstraintType::ValueType
        } else if declared == config.irs_constraint {
            ConstraintType::ItemRequiresStatement
        } else if declared == config.inverse_constraint {
            ConstraintType::Inverse
        } else if declared == config.symmetric_constraint {
            ConstraintType::Symmetric
        } else {
            report.skipped_unsupported += 1;
            continue;
        };

        let status = match first_value(stmt, &config.status) {
            None => ConstraintStatus::Normal,
            Some(v) if v.canonical() == config.status_mandatory => ConstraintStatus::Mandatory,
            Some(v) if v.canonical() == config.status_suggested => ConstraintStatus::Suggested,
            Some(v) => {
                report.issues.push(format!(
                    "{}: unrecognized status value `{}`, treating as normal",
                    stmt.id,
                    v.canonical()
                ));
                ConstraintStatus::Normal
            }
        };

        let exceptions: Vec<&str> = entity_values(stmt, &config.exception).collect();

        let spec = match ctype {
            ConstraintType::Type | ConstraintType::ValueType => {
                let allowed: Vec<&str> = entity_values(stmt, &config.allowed_class).collect();
                if allowed.is_empty() {
                    report.skipped_missing_classes += 1;
                    report.issues.push(format!(
                        "{}: {} constraint on {} lists no allowed classes, skipped",
                        stmt.id, ctype, stmt.subject
                    ));
                    continue;
                }
                let relation_mode = match first_value(stmt, &config.relation) {
                    // Unqualified type constraints test instances; the
                    // value-type reading admits instances or subclasses.
                    None if ctype == ConstraintType::Type => RelationMode::InstanceOf,
                    None => RelationMode::InstanceOrSubclass,
                    Some(v) if v.canonical() == config.relation_instance_of => {
                        RelationMode::InstanceOf
                    }
                    Some(v) if v.canonical() == config.relation_subclass_of => {
                        RelationMode::SubclassOf
                    }
                    Some(v) if v.canonical() == config.relation_instance_or_subclass => {
                        RelationMode::InstanceOrSubclass
                    }
                    Some(v) => {
                        report.skipped_unknown_relation += 1;
                        report.issues.push(format!(
                            "{}: unknown relation value `{}` on {}, constraint skipped",
                            stmt.id,
                            v.canonical(),
                            stmt.subject
                        ));
                        continue;
                    }
                };
                match ctype {
                    ConstraintType::Type => ConstraintSpec::type_constraint(
                        &stmt.subject,
                        allowed,
                        relation_mode,
                        status,
                    ),
                    _ => ConstraintSpec::value_type_constraint(
                        &stmt.subject,
                        allowed,
                        relation_mode,
                        status,
                    ),
                }
            }
            ConstraintType::ItemRequiresStatement | ConstraintType::Inverse => {
                let required = match entity_values(stmt, &config.required_property).next() {
                    Some(p) => p,
                    None => {
                        report.skipped_malformed += 1;
                        report.issues.push(format!(
                            "{}: {} constraint on {} names no required property, skipped",
                            stmt.id, ctype, stmt.subject
                        ));
                        continue;
                    }
                };
                if ctype == ConstraintType::ItemRequiresStatement {
                    let values: Vec<&str> = entity_values(stmt, &config.required_value).collect();
                    ConstraintSpec::irs_constraint(&stmt.subject, required, values, status)
                } else {
                    ConstraintSpec::inverse_constraint(&stmt.subject, required, status)
                }
            }
            ConstraintType::Symmetric => {
                ConstraintSpec::symmetric_constraint(&stmt.subject, status)
            }
        };
        report.specs.push(spec.with_exceptions(exceptions));
    }

    report
        .specs
        .sort_by(|a, b| spec_sort_key(a).cmp(&spec_sort_key(b)));
    report.specs.dedup();
    report
}

fn spec_sort_key(
    spec: &ConstraintSpec,
) -> (&str, ConstraintType, &str, String, String, ConstraintStatus) {
    (
        &spec.property,
        spec.ctype,
        &spec.required_property,
        join_set(&spec.allowed_classes),
        join_set(&spec.required_values),
        spec.status,
    )
}

const SPEC_COLUMNS: [&str; 8] = [
    "property",
    "ctype",
    "status",
    "relation",
    "allowed_classes",
    "required_property",
    "required_values",
    "exceptions",
];

/// Write specs to a tab-separated file; set-valued fields join their
/// members with `;`.
pub fn write_specs(path: &Path, specs: &[ConstraintSpec]) -> Result<(), ConstraintError> {
    let rows = specs.iter().map(|spec| {
        vec![
            spec.property.clone(),
            spec.ctype.to_string(),
            spec.status.to_string(),
            spec.relation_mode.to_string(),
            join_set(&spec.allowed_classes),
            spec.required_property.clone(),
            join_set(&spec.required_values),
            join_set(&spec.exceptions),
        ]
    });
    write_tsv(path, &SPEC_COLUMNS, rows)?;
    Ok(())
}

/// Read a spec file written by `write_specs`.
pub fn read_specs(path: &Path) -> Result<Vec<ConstraintSpec>, ConstraintError> {
    let mut lines = open_lines(path)?;
    let header = match lines.next() {
        Some(line) => line.map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?,
        None => {
            return Err(ModelError::EmptyFile {
                path: path.to_path_buf(),
            }
            .into())
        }
    };
    let (cols, _) = resolve_columns(path, &header, &SPEC_COLUMNS, &[])?;

    let bad = |line: usize, detail: String| ConstraintError::BadSpecRow {
        path: path.to_path_buf(),
        line,
        detail,
    };

    let mut specs = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|source| ModelError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < cols.width {
            return Err(bad(line_no, format!("expected {} columns", cols.width)));
        }
        let field = |n: usize| fields[cols.indices[n]];
        let ctype: ConstraintType = field(1).parse().map_err(|e: String| bad(line_no, e))?;
        let status: ConstraintStatus = field(2).parse().map_err(|e: String| bad(line_no, e))?;
        let relation_mode: RelationMode = field(3).parse().map_err(|e: String| bad(line_no, e))?;
        let mut spec = ConstraintSpec {
            property: field(0).to_string(),
            ctype,
            status,
            allowed_classes: split_set(field(4)),
            relation_mode,
            required_property: field(5).to_string(),
            required_values: split_set(field(6)),
            exceptions: split_set(field(7)),
        };
        match ctype {
            ConstraintType::Type | ConstraintType::ValueType => {
                if spec.allowed_classes.is_empty() {
                    return Err(bad(
                        line_no,
                        "type constraint without allowed classes".into(),
                    ));
                }
                spec.required_property.clear();
                spec.required_values.clear();
            }
            ConstraintType::ItemRequiresStatement | ConstraintType::Inverse => {
                if spec.required_property.is_empty() {
                    return Err(bad(line_no, "missing required property".into()));
                }
                spec.allowed_classes.clear();
                spec.relation_mode = RelationMode::default();
                if ctype == ConstraintType::Inverse {
                    spec.required_values.clear();
                }
            }
            ConstraintType::Symmetric => {
                spec.allowed_classes.clear();
                spec.relation_mode = RelationMode::default();
                spec.required_property.clear();
                spec.required_values.clear();
            }
        }
        specs.push(spec);
    }
    Ok(specs)
}
