//! The five constraint validators and the parallel driver.
//!
//! Every validator partitions the statements in scope into correct and
//! incorrect, with no third state: the two sets are disjoint and cover the
//! scope exactly. A subject listed in a constraint's exceptions is always
//! correct, whatever the data says. Statements whose object must be an
//! entity but is a literal cannot satisfy the constraint and count as
//! incorrect. Validation runs over the key-deduplicated view of the dump,
//! matching the set semantics used by diffing.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::model::{Dump, LiteralKind, Statement, StatementKey};

use super::closure::ClosureIndex;
use super::{ConstraintSpec, ConstraintStatus, ConstraintType, RelationMode};

/// Correct/incorrect partition for one constraint over one property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolationReport {
    pub property: String,
    pub ctype: ConstraintType,
    pub status: ConstraintStatus,
    /// Disambiguates sibling constraints on the same property.
    pub spec_tag: String,
    pub correct: Vec<StatementKey>,
    pub incorrect: Vec<StatementKey>,
}

impl ViolationReport {
    fn new(spec: &ConstraintSpec) -> ViolationReport {
        ViolationReport {
            property: spec.property.clone(),
            ctype: spec.ctype,
            status: spec.status,
            spec_tag: spec.tag(),
            correct: Vec::new(),
            incorrect: Vec::new(),
        }
    }

    pub fn total(&self) -> usize {
        self.correct.len() + self.incorrect.len()
    }

    /// Percentage of in-scope statements that violate; 0 for empty scope.
    pub fn violation_ratio(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            100.0 * self.incorrect.len() as f64 / self.total() as f64
        }
    }
}

/// Statement lookup by subject and property, for constraint checks that
/// consult other statements of the dump.
pub struct DumpIndex {
    by_subject: HashMap<String, HashMap<String, BTreeSet<String>>>,
}

/// Build the subject/property/value index over a dump.
pub fn build_dump_index(dump: &Dump) -> DumpIndex {
    let mut by_subject: HashMap<String, HashMap<String, BTreeSet<String>>> = HashMap::new();
    for stmt in &dump.statements {
        by_subject
            .entry(stmt.subject.clone())
            .or_default()
            .entry(stmt.property.clone())
            .or_default()
            .insert(stmt.object.canonical().to_string());
    }
    DumpIndex { by_subject }
}

impl DumpIndex {
    /// Canonical object values of (subject, property) statements.
    pub fn values(&self, subject: &str, property: &str) -> Option<&BTreeSet<String>> {
        self.by_subject
            .get(subject)
            .and_then(|props| props.get(property))
    }

    /// Whether the statement (subject, property, object) exists.
    pub fn has(&self, subject: &str, property: &str, object: &str) -> bool {
        self.values(subject, property)
            .is_some_and(|objects| objects.contains(object))
    }
}

fn partition<'a>(
    spec: &ConstraintSpec,
    statements: &[(StatementKey, &'a Statement)],
    mut is_correct: impl FnMut(&Statement) -> bool,
) -> ViolationReport {
    let mut report = ViolationReport::new(spec);
    for (key, stmt) in statements {
        // Exceptions dominate: an excepted subject is never a violation.
        if spec.exceptions.contains(stmt.subject.as_str()) || is_correct(stmt) {
            report.correct.push(key.clone());
        } else {
            report.incorrect.push(key.clone());
        }
    }
    report
}

/// Subjects must be instances of an allowed class or one of its
/// subclasses; under the subclass relation mode the subject itself must
/// reach an allowed class through subclass edges.
pub fn validate_type(
    spec: &ConstraintSpec,
    statements: &[(StatementKey, &Statement)],
    closure: &ClosureIndex,
) -> ViolationReport {
    let allowed = closure.class_test(&spec.allowed_classes);
    partition(spec, statements, |stmt| {
        node_satisfies_class_test(&stmt.subject, spec.relation_mode, closure, &allowed)
    })
}

/// The type test applied to object nodes; literal objects cannot satisfy
/// it.
pub fn validate_value_type(
    spec: &ConstraintSpec,
    statements: &[(StatementKey, &Statement)],
    closure: &ClosureIndex,
) -> ViolationReport {
    let allowed = closure.class_test(&spec.allowed_classes);
    partition(spec, statements, |stmt| {
        stmt.object.kind() == LiteralKind::Entity
            && node_satisfies_class_test(
                stmt.object.canonical(),
                spec.relation_mode,
                closure,
                &allowed,
            )
    })
}

fn node_satisfies_class_test(
    node: &str,
    mode: RelationMode,
    closure: &ClosureIndex,
    allowed: &super::closure::ClassTest<'_>,
) -> bool {
    let as_instance = || {
        closure
            .classes_of(node)
            .is_some_and(|classes| classes.iter().any(|c| allowed.contains(c)))
    };
    let as_subclass = || allowed.contains(node);
    match mode {
        RelationMode::InstanceOf => as_instance(),
        RelationMode::SubclassOf => as_subclass(),
        RelationMode::InstanceOrSubclass => as_instance() || as_subclass(),
    }
}

/// Subjects must also carry a statement with the required property, and
/// when required values are given, one of those values.
pub fn validate_item_requires_statement(
    spec: &ConstraintSpec,
    statements: &[(StatementKey, &Statement)],
    index: &DumpIndex,
) -> ViolationReport {
    partition(spec, statements, |stmt| {
        match index.values(&stmt.subject, &spec.required_property) {
            Some(values) => {
                spec.required_values.is_empty()
                    || values.iter().any(|v| spec.required_values.contains(v))
            }
            None => false,
        }
    })
}

/// For (s, p, o) the inverse statement (o, required, s) must exist.
pub fn validate_inverse(
    spec: &ConstraintSpec,
    statements: &[(StatementKey, &Statement)],
    index: &DumpIndex,
) -> ViolationReport {
    partition(spec, statements, |stmt| {
        stmt.object.kind() == LiteralKind::Entity
            && index.has(
                stmt.object.canonical(),
                &spec.required_property,
                &stmt.subject,
            )
    })
}

/// For (s, p, o) the mirrored statement (o, p, s) must exist.
pub fn validate_symmetric(
    spec: &ConstraintSpec,
    statements: &[(StatementKey, &Statement)],
    index: &DumpIndex,
) -> ViolationReport {
    partition(spec, statements, |stmt| {
        stmt.object.kind() == LiteralKind::Entity
            && index.has(stmt.object.canonical(), &stmt.property, &stmt.subject)
    })
}

/// Run one constraint against its in-scope statements.
pub fn validate_spec(
    spec: &ConstraintSpec,
    statements: &[(StatementKey, &Statement)],
    closure: &ClosureIndex,
    index: &DumpIndex,
) -> ViolationReport {
    match spec.ctype {
        ConstraintType::Type => validate_type(spec, statements, closure),
        ConstraintType::ValueType => validate_value_type(spec, statements, closure),
        ConstraintType::ItemRequiresStatement => {
            validate_item_requires_statement(spec, statements, index)
        }
        ConstraintType::Inverse => validate_inverse(spec, statements, index),
        ConstraintType::Symmetric => validate_symmetric(spec, statements, index),
    }
}

/// Validate every spec against the dump in parallel. Specs whose type is
/// not in `types` are skipped when a filter is given. Reports come back in
/// a stable order regardless of worker count.
pub fn validate_all(
    specs: &[ConstraintSpec],
    dump: &Dump,
    closure: &ClosureIndex,
    index: &DumpIndex,
    types: Option<&BTreeSet<ConstraintType>>,
    workers: usize,
) -> Vec<ViolationReport> {
    let keyed = dump.keyed_statements();
    let mut by_property: BTreeMap<&str, Vec<(StatementKey, &Statement)>> = BTreeMap::new();
    for (key, stmt) in keyed {
        by_property
            .entry(stmt.property.as_str())
            .or_default()
            .push((key, stmt));
    }
    let empty: Vec<(StatementKey, &Statement)> = Vec::new();
    let selected: Vec<&ConstraintSpec> = specs
        .iter()
        .filter(|spec| types.is_none_or(|set| set.contains(&spec.ctype)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("worker pool construction");
    let mut reports = pool.install(|| {
        selected
            .par_iter()
            .map(|spec| {
                let in_scope = by_property.get(spec.property.as_str()).unwrap_or(&empty);
                validate_spec(spec, in_scope, closure, index)
            })
            .collect::<Vec<ViolationReport>>()
    });
    reports.sort_by(|a, b| {
        (&a.property, a.ctype, &a.spec_tag, a.status).cmp(&(
            &b.property,
            b.ctype,
            &b.spec_tag,
            b.status,
        ))
    });
    reports
}
