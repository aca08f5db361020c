//! RDF terms: IRIs, typed literals, quads.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use super::GraphError;

pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";
pub const XSD_DATETIME: &str = "http://www.w3.org/2001/XMLSchema#dateTime";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

/// An absolute IRI. Cheap to clone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn new(value: impl AsRef<str>) -> Result<Self, GraphError> {
        let value = value.as_ref();
        validate_iri(value).map_err(|reason| GraphError::InvalidIri {
            value: value.to_string(),
            reason,
        })?;
        Ok(Iri(Arc::from(value)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn validate_iri(value: &str) -> Result<(), &'static str> {
    if value.is_empty() {
        return Err("empty IRI");
    }
    if value
        .chars()
        .any(|c| c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"'))
    {
        return Err("IRI contains whitespace, a control character, or one of < > \"");
    }
    let Some(colon) = value.find(':') else {
        return Err("IRI has no scheme");
    };
    let scheme = &value[..colon];
    let mut chars = scheme.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return Err("IRI scheme must start with a letter"),
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.')) {
        return Err("IRI scheme contains an invalid character");
    }
    Ok(())
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Iri {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

/// The four supported literal datatypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Datatype {
    String,
    Decimal,
    Boolean,
    DateTime,
}

impl Datatype {
    pub fn iri(self) -> &'static str {
        match self {
            Datatype::String => XSD_STRING,
            Datatype::Decimal => XSD_DECIMAL,
            Datatype::Boolean => XSD_BOOLEAN,
            Datatype::DateTime => XSD_DATETIME,
        }
    }

    pub fn from_iri(iri: &str) -> Option<Self> {
        match iri {
            XSD_STRING => Some(Datatype::String),
            XSD_DECIMAL => Some(Datatype::Decimal),
            XSD_BOOLEAN => Some(Datatype::Boolean),
            XSD_DATETIME => Some(Datatype::DateTime),
            _ => None,
        }
    }
}

/// A typed literal. The lexical form is validated against the datatype.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    lexical: Arc<str>,
    datatype: Datatype,
}

impl Literal {
    pub fn new(lexical: impl AsRef<str>, datatype: Datatype) -> Result<Self, GraphError> {
        let lexical = lexical.as_ref();
        let ok = match datatype {
            Datatype::String => true,
            Datatype::Decimal => Decimal::parse(lexical).is_some(),
            Datatype::Boolean => matches!(lexical, "true" | "false"),
            Datatype::DateTime => is_datetime(lexical),
        };
        if !ok {
            return Err(GraphError::InvalidLiteral {
                lexical: lexical.to_string(),
                datatype: datatype.iri().to_string(),
            });
        }
        Ok(Literal {
            lexical: Arc::from(lexical),
            datatype,
        })
    }

    pub fn string(lexical: impl AsRef<str>) -> Self {
        Literal {
            lexical: Arc::from(lexical.as_ref()),
            datatype: Datatype::String,
        }
    }

    pub fn decimal(lexical: impl AsRef<str>) -> Result<Self, GraphError> {
        Self::new(lexical, Datatype::Decimal)
    }

    /// Decimal literal for `value` rounded to `places` fractional digits.
    pub fn decimal_from_f64(value: f64, places: usize) -> Result<Self, GraphError> {
        Self::decimal(format!("{value:.places$}"))
    }

    pub fn boolean(value: bool) -> Self {
        Literal {
            lexical: Arc::from(if value { "true" } else { "false" }),
            datatype: Datatype::Boolean,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }

    pub fn is_numeric(&self) -> bool {
        self.datatype == Datatype::Decimal
    }

    pub fn as_decimal(&self) -> Option<Decimal> {
        if self.is_numeric() {
            Decimal::parse(&self.lexical)
        } else {
            None
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        if self.is_numeric() {
            self.lexical.parse().ok()
        } else {
            None
        }
    }
}

fn is_datetime(lexical: &str) -> bool {
    chrono::DateTime::parse_from_rfc3339(lexical).is_ok()
        || chrono::NaiveDateTime::parse_from_str(lexical, "%Y-%m-%dT%H:%M:%S%.f").is_ok()
}

/// Exact decimal value parsed from an `xsd:decimal` lexical form.
///
/// Stored as sign plus normalized digit strings so that comparison is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decimal {
    negative: bool,
    integer: String,
    fraction: String,
}

impl Decimal {
    pub fn parse(lexical: &str) -> Option<Decimal> {
        let (negative, body) = match lexical.as_bytes().first()? {
            b'-' => (true, &lexical[1..]),
            b'+' => (false, &lexical[1..]),
            _ => (false, lexical),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        let integer = int_part.trim_start_matches('0').to_string();
        let fraction = frac_part.trim_end_matches('0').to_string();
        let is_zero = integer.is_empty() && fraction.is_empty();
        Some(Decimal {
            negative: negative && !is_zero,
            integer,
            fraction,
        })
    }

    fn cmp_magnitude(&self, other: &Decimal) -> Ordering {
        self.integer
            .len()
            .cmp(&other.integer.len())
            .then_with(|| self.integer.cmp(&other.integer))
            .then_with(|| self.fraction.cmp(&other.fraction))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.negative, other.negative) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_magnitude(other),
            (true, true) => other.cmp_magnitude(self),
        }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            Term::Iri(_) => None,
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

impl fmt::Display for Term {
    /// N-Triples form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Literal(lit) => {
                f.write_str("\"")?;
                f.write_str(&escape_lexical(lit.lexical()))?;
                f.write_str("\"")?;
                if lit.datatype() != Datatype::String {
                    write!(f, "^^<{}>", lit.datatype().iri())?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub(crate) fn escape_lexical(lexical: &str) -> String {
    let mut out = String::with_capacity(lexical.len());
    for c in lexical.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() && (c as u32) <= 0xFFFF => {
                out.push_str(&format!("\\u{:04X}", c as u32))
            }
            c if c.is_control() => out.push_str(&format!("\\U{:08X}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Graph slot of a quad: the default graph or a named graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphName {
    Default,
    Named(Iri),
}

impl GraphName {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            GraphName::Named(iri) => Some(iri),
            GraphName::Default => None,
        }
    }
}

impl From<Iri> for GraphName {
    fn from(iri: Iri) -> Self {
        GraphName::Named(iri)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject,
            predicate,
            object: object.into(),
        }
    }

    pub fn in_graph(self, graph: GraphName) -> Quad {
        Quad {
            subject: self.subject,
            predicate: self.predicate,
            object: self.object,
            graph,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> <{}> {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Quad {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
    pub graph: GraphName,
}

impl Quad {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>, graph: GraphName) -> Self {
        Quad {
            subject,
            predicate,
            object: object.into(),
            graph,
        }
    }

    pub fn triple(&self) -> Triple {
        Triple {
            subject: self.subject.clone(),
            predicate: self.predicate.clone(),
            object: self.object.clone(),
        }
    }
}

impl fmt::Display for Quad {
    /// N-Quads line without the trailing newline.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> <{}> {}", self.subject, self.predicate, self.object)?;
        if let GraphName::Named(g) = &self.graph {
            write!(f, " <{g}>")?;
        }
        f.write_str(" .")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iri_validation() {
        assert!(Iri::new("http://ex/a").is_ok());
        assert!(Iri::new("onto:Smoking").is_ok());
        assert!(Iri::new("").is_err());
        assert!(Iri::new("no-scheme").is_err());
        assert!(Iri::new("http://ex/a b").is_err());
        assert!(Iri::new("http://ex/<a>").is_err());
        assert!(Iri::new("1http://ex").is_err());
    }

    #[test]
    fn literal_validation() {
        assert!(Literal::decimal("0.64").is_ok());
        assert!(Literal::decimal("-12").is_ok());
        assert!(Literal::decimal(".5").is_ok());
        assert!(Literal::decimal("1e5").is_err());
        assert!(Literal::decimal("NaN").is_err());
        assert!(Literal::decimal("").is_err());
        assert!(Literal::decimal(".").is_err());
        assert!(Literal::new("true", Datatype::Boolean).is_ok());
        assert!(Literal::new("yes", Datatype::Boolean).is_err());
        assert!(Literal::new("2010-09-22T10:00:00Z", Datatype::DateTime).is_ok());
        assert!(Literal::new("2010-09-22T10:00:00", Datatype::DateTime).is_ok());
        assert!(Literal::new("2010-09-22", Datatype::DateTime).is_err());
    }

    #[test]
    fn decimal_ordering_is_exact() {
        let d = |s| Decimal::parse(s).unwrap();
        assert_eq!(d("0.50"), d("0.5"));
        assert_eq!(d("-0.0"), d("0"));
        assert!(d("0.64") > d("0.5"));
        assert!(d("10") > d("9.999999999999999999999"));
        assert!(d("-2") < d("-1.5"));
        assert!(d("0.30000000000000000001") > d("0.3"));
        assert!(d("-0.1") < d("0"));
    }

    #[test]
    fn literal_display_escapes() {
        let t = Term::Literal(Literal::string("a\"b\\c\nd\te\u{1}"));
        assert_eq!(t.to_string(), r#""a\"b\\c\nd\te\u0001""#);
        let t = Term::Literal(Literal::decimal("0.64").unwrap());
        assert_eq!(
            t.to_string(),
            "\"0.64\"^^<http://www.w3.org/2001/XMLSchema#decimal>"
        );
    }
}
