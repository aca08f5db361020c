//! Alarm collection from persisted risk scores.

use std::collections::BTreeMap;

use serde::Serialize;

use super::RuleError;
use crate::graphstore::{Dataset, Decimal, GraphName, Iri, Literal, Quad, QuadPattern, Term};
use crate::ontology::Vocabulary;
use crate::risk::Probability;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alarm {
    pub patient: Iri,
    pub doctor: Iri,
    pub risk: Probability,
    pub threshold: Probability,
    pub sequence: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AlarmCollection {
    pub alarms: Vec<Alarm>,
    /// Patients at or above the threshold with no `treatedBy` doctor.
    pub missing_doctor: Vec<Iri>,
}

/// Raises one alarm per patient whose `riskScore` is at or above
/// `threshold`, addressed to the patient's treating doctor. Scores are read
/// from every graph; if a patient has several, the largest counts. When a
/// patient has several doctors the smallest IRI is chosen. Alarms are ordered
/// by patient IRI and numbered from 1.
pub fn collect_alarms(
    dataset: &Dataset,
    threshold: Probability,
    vocab: &Vocabulary,
) -> Result<AlarmCollection, RuleError> {
    let risk_score = vocab.term("riskScore");
    let treated_by = vocab.term("treatedBy");
    let limit = Decimal::parse(&threshold.value().to_string()).expect("finite probability formats as a decimal");

    let mut scores: BTreeMap<Iri, (Decimal, f64)> = BTreeMap::new();
    let pattern = QuadPattern {
        predicate: Some(risk_score),
        ..QuadPattern::any()
    };
    for q in dataset.match_quads(&pattern) {
        let bad = || RuleError::RiskScoreType {
            patient: q.subject.to_string(),
        };
        let lit = q.object.as_literal().ok_or_else(bad)?;
        let dec = lit.as_decimal().ok_or_else(bad)?;
        let value = lit.as_f64().ok_or_else(bad)?;
        Probability::new(value).map_err(|_| bad())?;
        match scores.get(&q.subject) {
            Some((best, _)) if *best >= dec => {}
            _ => {
                scores.insert(q.subject.clone(), (dec, value));
            }
        }
    }

    let mut out = AlarmCollection::default();
    let mut sequence = 0;
    for (patient, (score, value)) in scores {
        if score < limit {
            continue;
        }
        let doctors = dataset.match_quads(&QuadPattern {
            subject: Some(patient.clone()),
            predicate: Some(treated_by.clone()),
            ..QuadPattern::any()
        });
        let Some(doctor) = doctors.iter().filter_map(|q| q.object.as_iri()).min().cloned() else {
            log::warn!("patient {patient} is at risk but has no treating doctor");
            out.missing_doctor.push(patient);
            continue;
        };
        sequence += 1;
        out.alarms.push(Alarm {
            patient,
            doctor,
            risk: Probability::new(value).expect("checked above"),
            threshold,
            sequence,
        });
    }
    Ok(out)
}

/// Quads recording `alarms` in the default graph, one `Alarm` individual per
/// alarm named `<namespace>alarm-<sequence>`.
pub fn alarm_quads(alarms: &[Alarm], vocab: &Vocabulary) -> Vec<Quad> {
    let mut quads = Vec::with_capacity(alarms.len() * 3);
    for a in alarms {
        let node = vocab.term(&format!("alarm-{}", a.sequence));
        let quad = |p: Iri, o: Term| Quad::new(node.clone(), p, o, GraphName::Default);
        quads.push(quad(vocab.rdf_type().clone(), vocab.term("Alarm").into()));
        quads.push(quad(vocab.term("alarmFor"), a.patient.clone().into()));
        let risk = Literal::decimal_from_f64(a.risk.value(), 12).expect("probability formats as a decimal");
        quads.push(quad(vocab.term("alarmRisk"), risk.into()));
    }
    quads
}
