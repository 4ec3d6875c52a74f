//! Typed literal values and their canonical forms.
//!
//! Every statement object is a [`LiteralValue`]: an entity reference, a
//! string, a date with precision, a quantity, or an unclassified value.
//! Two values with the same canonical form are treated as semantically
//! equivalent everywhere else in this crate; in particular the year
//! `000000001964-00-00T00:00:00Z/9` and `1964-00-00T00:00:00Z/9` share one
//! canonical form and never register as distinct objects.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Syntactic class of a literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LiteralKind {
    /// Reference to another node (`Q42`, `P31`).
    Entity,
    /// Plain text. Never normalized.
    String,
    /// Timestamp with a precision in `0..=14` (9 = year, 11 = day).
    Date,
    /// Number with optional tolerance interval and unit.
    Quantity,
    /// Recognized but untyped syntax (currently geo coordinates).
    Other,
}

impl fmt::Display for LiteralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LiteralKind::Entity => "entity",
            LiteralKind::String => "string",
            LiteralKind::Date => "date",
            LiteralKind::Quantity => "quantity",
            LiteralKind::Other => "other",
        };
        f.write_str(s)
    }
}

/// A typed literal with its original surface form and canonical rendering.
///
/// Equality, ordering and hashing use `(kind, canonical)` only; the raw
/// surface form is retained for round-tripping but does not participate in
/// identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiteralValue {
    kind: LiteralKind,
    raw: String,
    canonical: String,
    date_precision: Option<u8>,
    magnitude: Option<f64>,
    unit: Option<String>,
}

impl PartialEq for LiteralValue {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.canonical == other.canonical
    }
}

impl Eq for LiteralValue {}

impl PartialOrd for LiteralValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LiteralValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind
            .cmp(&other.kind)
            .then_with(|| self.canonical.cmp(&other.canonical))
    }
}

impl Hash for LiteralValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.canonical.hash(state);
    }
}

impl fmt::Display for LiteralValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

static ENTITY_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[QP][1-9][0-9]*$").unwrap());

static DATE_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^\^?([+-]?)([0-9]{1,16})-([0-9]{2})-([0-9]{2})T([0-9]{2}):([0-9]{2}):([0-9]{2})Z?(?:/([0-9]{1,2}))?$",
    )
    .unwrap()
});

static QUANTITY_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^([+-]?(?:[0-9]+(?:\.[0-9]+)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)(?:\[([^\],]+),([^\],]+)\])?(?:\s*([A-Za-z][A-Za-z0-9]*))?$",
    )
    .unwrap()
});

static COORD_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^@-?[0-9]+(?:\.[0-9]+)?/-?[0-9]+(?:\.[0-9]+)?$").unwrap());

/// Day precision, assumed when a date carries no `/precision` suffix.
const DEFAULT_DATE_PRECISION: u8 = 11;

impl LiteralValue {
    /// Classify a raw object value and compute its canonical form.
    ///
    /// Detection is purely syntactic: a `Q`/`P` id becomes an entity, an
    /// ISO-like timestamp (optionally prefixed with `^` and suffixed with
    /// `/precision`) becomes a date, a number with optional tolerance and
    /// unit becomes a quantity, a `@lat/lon` pair becomes `Other`, and
    /// anything else is a string kept verbatim.
    pub fn parse(text: &str) -> LiteralValue {
        if ENTITY_RE.is_match(text) {
            return LiteralValue {
                kind: LiteralKind::Entity,
                raw: text.to_string(),
                canonical: text.to_string(),
                date_precision: None,
                magnitude: None,
                unit: None,
            };
        }
        if let Some(caps) = DATE_RE.captures(text) {
            let precision: u8 = caps
                .get(8)
                .map(|m| m.as_str().parse().unwrap_or(u8::MAX))
                .unwrap_or(DEFAULT_DATE_PRECISION);
            // Precisions above 14 are not defined; treat the whole token as text.
            if precision <= 14 {
                let sign = if &caps[1] == "-" { "-" } else { "" };
                let year_digits = caps[2].trim_start_matches('0');
                let year = if year_digits.is_empty() {
                    "0"
                } else {
                    year_digits
                };
                let canonical = format!(
                    "{sign}{year}-{}-{}T{}:{}:{}Z/{precision}",
                    &caps[3], &caps[4], &caps[5], &caps[6], &caps[7]
                );
                return LiteralValue {
                    kind: LiteralKind::Date,
                    raw: text.to_string(),
                    canonical,
                    date_precision: Some(precision),
                    magnitude: None,
                    unit: None,
                };
            }
        }
        if let Some(caps) = QUANTITY_RE.captures(text) {
            if let Ok(magnitude) = caps[1].parse::<f64>() {
                if magnitude.is_finite() {
                    let tolerance = match (caps.get(2), caps.get(3)) {
                        (Some(lo), Some(hi)) => {
                            match (lo.as_str().parse::<f64>(), hi.as_str().parse::<f64>()) {
                                (Ok(lo), Ok(hi)) if lo.is_finite() && hi.is_finite() => {
                                    Some((lo, hi))
                                }
                                _ => None,
                            }
                        }
                        _ => None,
                    };
                    // A tolerance bracket that does not parse as two numbers
                    // disqualifies the token from being a quantity.
                    if caps.get(2).is_none() || tolerance.is_some() {
                        let unit = caps.get(4).map(|m| m.as_str().to_string());
                        let mut canonical = format_number(magnitude);
                        if let Some((lo, hi)) = tolerance {
                            canonical =
                                format!("{canonical}[{},{}]", format_number(lo), format_number(hi));
                        }
                        if let Some(u) = &unit {
                            canonical.push(' ');
                            canonical.push_str(u);
                        }
                        return LiteralValue {
                            kind: LiteralKind::Quantity,
                            raw: text.to_string(),
                            canonical,
                            date_precision: None,
                            magnitude: Some(magnitude),
                            unit,
                        };
                    }
                }
            }
        }
        if COORD_RE.is_match(text) {
            return LiteralValue {
                kind: LiteralKind::Other,
                raw: text.to_string(),
                canonical: text.to_string(),
                date_precision: None,
                magnitude: None,
                unit: None,
            };
        }
        LiteralValue {
            kind: LiteralKind::String,
            raw: text.to_string(),
            canonical: text.to_string(),
            date_precision: None,
            magnitude: None,
            unit: None,
        }
    }

    /// Entity literal from a node id, without going through syntax detection.
    pub fn entity(id: &str) -> LiteralValue {
        LiteralValue {
            kind: LiteralKind::Entity,
            raw: id.to_string(),
            canonical: id.to_string(),
            date_precision: None,
            magnitude: None,
            unit: None,
        }
    }

    pub fn kind(&self) -> LiteralKind {
        self.kind
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    /// Present exactly when `kind == Date`.
    pub fn date_precision(&self) -> Option<u8> {
        self.date_precision
    }

    /// Present exactly when `kind == Quantity`.
    pub fn magnitude(&self) -> Option<f64> {
        self.magnitude
    }

    /// Unit token of a quantity, if any (`km`, `U11573`, ...).
    pub fn unit(&self) -> Option<&str> {
        self.unit.as_deref()
    }

    /// Calendar components of a date literal, decoded from the canonical form.
    pub fn date_parts(&self) -> Option<DateParts> {
        if self.kind != LiteralKind::Date {
            return None;
        }
        DateParts::from_canonical(&self.canonical)
    }
}

/// Decoded calendar fields of a date literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DateParts {
    pub year: i64,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
    pub second: u8,
    pub precision: u8,
}

impl DateParts {
    pub(crate) fn from_canonical(canonical: &str) -> Option<DateParts> {
        let caps = DATE_RE.captures(canonical)?;
        let sign: i64 = if &caps[1] == "-" { -1 } else { 1 };
        let year: i64 = caps[2].parse().ok()?;
        Some(DateParts {
            year: sign * year,
            month: caps[3].parse().ok()?,
            day: caps[4].parse().ok()?,
            hour: caps[5].parse().ok()?,
            minute: caps[6].parse().ok()?,
            second: caps[7].parse().ok()?,
            precision: caps.get(8)?.as_str().parse().ok()?,
        })
    }
}

/// Shortest decimal rendering that round-trips through `f64`.
fn format_number(x: f64) -> String {
    let mut s = format!("{x}");
    // `format!` keeps a negative zero sign; fold it away.
    if s == "-0" {
        s = "0".to_string();
    }
    s
}
