//! Shared vocabulary for patient records and record validation.
//!
//! Classes, properties and risk-factor individuals live under one namespace.
//! Validation is closed-world over a patient's own subgraph: the patient's
//! triples plus the triples of the observations it links to.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::graphstore::{
    serialize_triples, Datatype, Dataset, GraphError, Iri, Term, Triple, RDF_TYPE,
};

pub const DEFAULT_NAMESPACE: &str = "http://example.org/brca/onto#";

const RDFS_CLASS: &str = "http://www.w3.org/2000/01/rdf-schema#Class";
const RDF_PROPERTY: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
const RDFS_DOMAIN: &str = "http://www.w3.org/2000/01/rdf-schema#domain";
const RDFS_RANGE: &str = "http://www.w3.org/2000/01/rdf-schema#range";
const RDFS_LITERAL: &str = "http://www.w3.org/2000/01/rdf-schema#Literal";

pub const CLASSES: [&str; 6] = ["Patient", "Department", "Observation", "RiskFactor", "Alarm", "Doctor"];

pub const FACTORS: [&str; 9] = [
    "Gender",
    "Age",
    "GeneticInheritance",
    "Ethnicity",
    "MenstrualHistory",
    "PregnancyBreastfeeding",
    "Alcohol",
    "Smoking",
    "Overweight",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Range {
    Class(Iri),
    Datatype(Datatype),
    /// Any literal, whatever its datatype.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyDecl {
    pub iri: Iri,
    pub domain: Iri,
    pub range: Range,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    namespace: String,
    classes: BTreeSet<Iri>,
    properties: BTreeMap<Iri, PropertyDecl>,
    factor_individuals: BTreeSet<Iri>,
    rdf_type: Iri,
}

/// The built-in vocabulary under [`DEFAULT_NAMESPACE`].
pub fn builtin_vocabulary() -> Vocabulary {
    Vocabulary::with_namespace(DEFAULT_NAMESPACE).expect("default namespace is a valid IRI")
}

impl Vocabulary {
    pub fn with_namespace(namespace: &str) -> Result<Self, GraphError> {
        let iri = |local: &str| Iri::new(format!("{namespace}{local}"));
        let classes = CLASSES.iter().map(|c| iri(c)).collect::<Result<BTreeSet<_>, _>>()?;
        let factor_individuals = FACTORS.iter().map(|f| iri(f)).collect::<Result<BTreeSet<_>, _>>()?;
        let class = |c: &str| iri(c).map(Range::Class);
        let decls = [
            ("hasObservation", "Patient", class("Observation")?),
            ("observedFactor", "Observation", class("RiskFactor")?),
            ("observedValue", "Observation", Range::Literal),
            ("treatedBy", "Patient", class("Doctor")?),
            ("belongsToDepartment", "Doctor", class("Department")?),
            ("riskScore", "Patient", Range::Datatype(Datatype::Decimal)),
            ("alarmFor", "Alarm", class("Patient")?),
            ("alarmRisk", "Alarm", Range::Datatype(Datatype::Decimal)),
        ];
        let mut properties = BTreeMap::new();
        for (name, domain, range) in decls {
            let decl = PropertyDecl {
                iri: iri(name)?,
                domain: iri(domain)?,
                range,
            };
            properties.insert(decl.iri.clone(), decl);
        }
        Ok(Vocabulary {
            namespace: namespace.to_string(),
            classes,
            properties,
            factor_individuals,
            rdf_type: Iri::new(RDF_TYPE)?,
        })
    }

    pub fn namespace(&self) -> &str {
        &self.namespace
    }

    /// `namespace + local`. Panics only if the namespace was invalid, which
    /// construction rules out.
    pub fn term(&self, local: &str) -> Iri {
        Iri::new(format!("{}{local}", self.namespace)).expect("namespace validated at construction")
    }

    pub fn rdf_type(&self) -> &Iri {
        &self.rdf_type
    }

    pub fn classes(&self) -> &BTreeSet<Iri> {
        &self.classes
    }

    pub fn properties(&self) -> impl Iterator<Item = &PropertyDecl> {
        self.properties.values()
    }

    pub fn property(&self, iri: &Iri) -> Option<&PropertyDecl> {
        self.properties.get(iri)
    }

    pub fn factor_individuals(&self) -> &BTreeSet<Iri> {
        &self.factor_individuals
    }

    pub fn is_factor(&self, iri: &Iri) -> bool {
        self.factor_individuals.contains(iri)
    }

    /// Domains and class ranges are declared classes; factor individuals
    /// are not class IRIs.
    pub fn check(&self) -> Result<(), String> {
        for p in self.properties.values() {
            if !self.classes.contains(&p.domain) {
                return Err(format!("property <{}> has undeclared domain <{}>", p.iri, p.domain));
            }
            if let Range::Class(c) = &p.range {
                if !self.classes.contains(c) {
                    return Err(format!("property <{}> has undeclared range <{c}>", p.iri));
                }
            }
        }
        if let Some(f) = self.factor_individuals.iter().find(|f| self.classes.contains(*f)) {
            return Err(format!("factor individual <{f}> is also a class"));
        }
        Ok(())
    }

    /// Declaration triples: classes, properties with domain and range, and
    /// factor individuals typed as `RiskFactor`.
    pub fn to_triples(&self) -> Vec<Triple> {
        let iri = |s: &str| Iri::new(s).expect("constant IRI");
        let ty = self.rdf_type.clone();
        let mut out = Vec::new();
        for c in &self.classes {
            out.push(Triple::new(c.clone(), ty.clone(), iri(RDFS_CLASS)));
        }
        for p in self.properties.values() {
            out.push(Triple::new(p.iri.clone(), ty.clone(), iri(RDF_PROPERTY)));
            out.push(Triple::new(p.iri.clone(), iri(RDFS_DOMAIN), p.domain.clone()));
            let range = match &p.range {
                Range::Class(c) => c.clone(),
                Range::Datatype(dt) => iri(dt.iri()),
                Range::Literal => iri(RDFS_LITERAL),
            };
            out.push(Triple::new(p.iri.clone(), iri(RDFS_RANGE), range));
        }
        let risk_factor = self.term("RiskFactor");
        for f in &self.factor_individuals {
            out.push(Triple::new(f.clone(), ty.clone(), risk_factor.clone()));
        }
        out.sort();
        out
    }

    pub fn export_ntriples(&self) -> String {
        serialize_triples(&self.to_triples())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    MissingType,
    UnknownProperty,
    RangeMismatch,
    MissingRequired,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::MissingType => "missing-type",
            ViolationKind::UnknownProperty => "unknown-property",
            ViolationKind::RangeMismatch => "range-mismatch",
            ViolationKind::MissingRequired => "missing-required",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub subject: Iri,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> {}: {}", self.subject, self.kind, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the patient's record against `vocab`. Triples are read from all
/// graphs of `dataset`.
pub fn validate_record(dataset: &Dataset, patient: &Iri, vocab: &Vocabulary) -> ValidationReport {
    let mut violations = Vec::new();
    let patient_triples = dataset.describe(patient);
    let has_type = |triples: &[Triple], class: &str| {
        let class = Term::Iri(vocab.term(class));
        triples
            .iter()
            .any(|t| t.predicate == *vocab.rdf_type() && t.object == class)
    };
    if !has_type(&patient_triples, "Patient") {
        violations.push(Violation {
            subject: patient.clone(),
            kind: ViolationKind::MissingType,
            detail: format!("no rdf:type <{}>", vocab.term("Patient")),
        });
    }
    check_properties(&patient_triples, vocab, &mut violations);

    let has_observation = vocab.term("hasObservation");
    let observations: BTreeSet<Iri> = patient_triples
        .iter()
        .filter(|t| t.predicate == has_observation)
        .filter_map(|t| t.object.as_iri().cloned())
        .collect();
    let observed_factor = vocab.term("observedFactor");
    let observed_value = vocab.term("observedValue");
    for obs in &observations {
        let triples = dataset.describe(obs);
        if !has_type(&triples, "Observation") {
            violations.push(Violation {
                subject: obs.clone(),
                kind: ViolationKind::MissingType,
                detail: format!("no rdf:type <{}>", vocab.term("Observation")),
            });
        }
        for required in [&observed_factor, &observed_value] {
            if !triples.iter().any(|t| t.predicate == *required) {
                violations.push(Violation {
                    subject: obs.clone(),
                    kind: ViolationKind::MissingRequired,
                    detail: format!("missing <{required}>"),
                });
            }
        }
        check_properties(&triples, vocab, &mut violations);
    }
    violations.sort();
    ValidationReport { violations }
}

fn check_properties(triples: &[Triple], vocab: &Vocabulary, out: &mut Vec<Violation>) {
    let observed_factor = vocab.term("observedFactor");
    for t in triples {
        if t.predicate == *vocab.rdf_type() {
            continue;
        }
        let Some(decl) = vocab.property(&t.predicate) else {
            out.push(Violation {
                subject: t.subject.clone(),
                kind: ViolationKind::UnknownProperty,
                detail: format!("<{}> is not in the vocabulary", t.predicate),
            });
            continue;
        };
        let ok = match (&decl.range, &t.object) {
            _ if decl.iri == observed_factor => t.object.as_iri().is_some_and(|f| vocab.is_factor(f)),
            (Range::Class(_), Term::Iri(_)) => true,
            (Range::Datatype(dt), Term::Literal(l)) => l.datatype() == *dt,
            (Range::Literal, Term::Literal(_)) => true,
            _ => false,
        };
        if !ok {
            out.push(Violation {
                subject: t.subject.clone(),
                kind: ViolationKind::RangeMismatch,
                detail: format!("<{}> has out-of-range value {}", t.predicate, t.object),
            });
        }
    }
}
