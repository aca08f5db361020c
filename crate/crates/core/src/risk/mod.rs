//! Posterior risk by sequential Bayes updates over observed factors.
//!
//! The hypothesis space is binary (case / control). Each observed factor
//! value contributes a likelihood pair from its conditional probability
//! table; factors are assumed conditionally independent given the
//! hypothesis, so the posterior after one factor becomes the prior for the
//! next.

mod model_file;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graphstore::Iri;
use crate::ontology::Vocabulary;

pub use model_file::{load_model, parse_model};

/// Smallest likelihood a smoothed table may hold.
pub const SMOOTHING_EPSILON: f64 = 1e-6;

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RiskError {
    #[error("{what} must be a finite probability, got {value}")]
    InvalidProbability { what: String, value: f64 },
    #[error("Bayes update has a zero denominator")]
    ZeroDenominator,
    #[error("factor <{0}> is observed more than once")]
    DuplicateFactor(Iri),
    #[error("conditional table for <{factor}>: {reason}")]
    InvalidTable { factor: Iri, reason: String },
    #[error("factor <{0}> is not a risk factor in the vocabulary")]
    UnknownFactor(Iri),
    #[error("model file: {0}")]
    ModelFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self, RiskError> {
        Self::named(value, "probability")
    }

    fn named(value: f64, what: &str) -> Result<Self, RiskError> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(RiskError::InvalidProbability {
                what: what.to_string(),
                value,
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `P(B|A)·P(A) / (P(B|A)·P(A) + P(B|¬A)·(1 − P(A)))`.
pub fn bayes_update(
    prior: Probability,
    p_b_given_a: Probability,
    p_b_given_not_a: Probability,
) -> Result<Probability, RiskError> {
    let joint_case = p_b_given_a.0 * prior.0;
    let joint_control = p_b_given_not_a.0 * (1.0 - prior.0);
    let evidence = joint_case + joint_control;
    if evidence <= 0.0 {
        return Err(RiskError::ZeroDenominator);
    }
    Ok(Probability((joint_case / evidence).clamp(0.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LikelihoodRow {
    pub p_case: Probability,
    pub p_control: Probability,
}

/// Conditional probability table for one factor: per value label, the
/// probability of observing that value among cases and among controls.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCpt {
    factor: Iri,
    rows: BTreeMap<String, LikelihoodRow>,
}

impl FactorCpt {
    /// Builds a table from `(label, p_case, p_control)` rows.
    ///
    /// Each column must sum to 1 within 1e-9. A column holding any entry
    /// outside `[ε, 1−ε]` is smoothed to `ε + (1 − kε)·p` for `k` labels;
    /// columns already inside the band are kept as given.
    pub fn new<L: Into<String>>(
        factor: Iri,
        rows: impl IntoIterator<Item = (L, f64, f64)>,
    ) -> Result<Self, RiskError> {
        let invalid = |reason: String| RiskError::InvalidTable {
            factor: factor.clone(),
            reason,
        };
        let mut labels = Vec::new();
        let mut case = Vec::new();
        let mut control = Vec::new();
        let mut seen = BTreeSet::new();
        for (label, p_case, p_control) in rows {
            let label = label.into();
            if label.is_empty() {
                return Err(invalid("empty value label".into()));
            }
            if !seen.insert(label.clone()) {
                return Err(invalid(format!("duplicate value label {label:?}")));
            }
            Probability::named(p_case, &format!("p_case of {label:?}"))?;
            Probability::named(p_control, &format!("p_control of {label:?}"))?;
            labels.push(label);
            case.push(p_case);
            control.push(p_control);
        }
        if labels.len() < 2 {
            return Err(invalid("at least two value labels are required".into()));
        }
        for (name, column) in [("p_case", &mut case), ("p_control", &mut control)] {
            let sum: f64 = column.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(invalid(format!("{name} column sums to {sum}, not 1")));
            }
            smooth(column);
        }
        let rows = labels
            .into_iter()
            .zip(case.into_iter().zip(control))
            .map(|(label, (c, n))| {
                (
                    label,
                    LikelihoodRow {
                        p_case: Probability(c),
                        p_control: Probability(n),
                    },
                )
            })
            .collect();
        Ok(FactorCpt { factor, rows })
    }

    pub fn factor(&self) -> &Iri {
        &self.factor
    }

    pub fn row(&self, label: &str) -> Option<&LikelihoodRow> {
        self.rows.get(label)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &LikelihoodRow)> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v))
    }
}

fn smooth(column: &mut [f64]) {
    let eps = SMOOTHING_EPSILON;
    if column.iter().all(|p| (eps..=1.0 - eps).contains(p)) {
        return;
    }
    let k = column.len() as f64;
    for p in column.iter_mut() {
        *p = eps + (1.0 - k * eps) * *p;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskModel {
    prior: Probability,
    threshold: Probability,
    cpts: BTreeMap<Iri, FactorCpt>,
}

impl RiskModel {
    /// Validates `prior` and `threshold` in (0, 1) and that every table's
    /// factor is a risk-factor individual of `vocab`.
    pub fn new(
        prior: f64,
        threshold: f64,
        cpts: impl IntoIterator<Item = FactorCpt>,
        vocab: &Vocabulary,
    ) -> Result<Self, RiskError> {
        let open_unit = |v: f64, what: &str| {
            let p = Probability::named(v, what)?;
            if v <= 0.0 || v >= 1.0 {
                return Err(RiskError::InvalidProbability {
                    what: format!("{what} (must lie strictly between 0 and 1)"),
                    value: v,
                });
            }
            Ok(p)
        };
        let prior = open_unit(prior, "prior")?;
        let threshold = open_unit(threshold, "threshold")?;
        let mut map = BTreeMap::new();
        for cpt in cpts {
            if !vocab.is_factor(&cpt.factor) {
                return Err(RiskError::UnknownFactor(cpt.factor.clone()));
            }
            if map.contains_key(&cpt.factor) {
                return Err(RiskError::InvalidTable {
                    factor: cpt.factor.clone(),
                    reason: "factor defined twice".into(),
                });
            }
            map.insert(cpt.factor.clone(), cpt);
        }
        Ok(RiskModel {
            prior,
            threshold,
            cpts: map,
        })
    }

    pub fn prior(&self) -> Probability {
        self.prior
    }

    pub fn threshold(&self) -> Probability {
        self.threshold
    }

    pub fn cpt(&self, factor: &Iri) -> Option<&FactorCpt> {
        self.cpts.get(factor)
    }

    pub fn cpts(&self) -> impl Iterator<Item = &FactorCpt> {
        self.cpts.values()
    }

    fn lookup(&self, obs: &Observation) -> Option<&LikelihoodRow> {
        self.cpts.get(&obs.factor).and_then(|c| c.row(&obs.value))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Observation {
    pub factor: Iri,
    pub value: String,
}

impl Observation {
    pub fn new(factor: Iri, value: impl Into<String>) -> Self {
        Observation {
            factor,
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub factor: Iri,
    pub value: String,
    pub prior_before: Probability,
    pub posterior_after: Probability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub posterior: Probability,
    pub trace: Vec<TraceStep>,
    pub skipped: Vec<Observation>,
}

impl RiskEstimate {
    /// Each step starts from the previous step's posterior, the first from
    /// `prior`, and the last ends at `posterior`.
    pub fn trace_is_chained(&self, prior: Probability) -> bool {
        let mut current = prior;
        for step in &self.trace {
            if step.prior_before != current {
                return false;
            }
            current = step.posterior_after;
        }
        current == self.posterior
    }
}

fn check_duplicates(observations: &[Observation]) -> Result<(), RiskError> {
    let mut seen = BTreeSet::new();
    for obs in observations {
        if !seen.insert(&obs.factor) {
            return Err(RiskError::DuplicateFactor(obs.factor.clone()));
        }
    }
    Ok(())
}

/// Folds Bayes updates over `observations` sorted by factor IRI.
///
/// Observations naming an unmodelled factor or value label are returned in
/// `skipped` and leave the posterior unchanged.
pub fn estimate_risk(model: &RiskModel, observations: &[Observation]) -> Result<RiskEstimate, RiskError> {
    let mut sorted = observations.to_vec();
    sorted.sort();
    estimate_risk_in_order(model, &sorted)
}

/// Same as [`estimate_risk`] but folds in the order given.
pub fn estimate_risk_in_order(
    model: &RiskModel,
    observations: &[Observation],
) -> Result<RiskEstimate, RiskError> {
    check_duplicates(observations)?;
    let mut posterior = model.prior;
    let mut trace = Vec::new();
    let mut skipped = Vec::new();
    for obs in observations {
        let Some(row) = model.lookup(obs) else {
            skipped.push(obs.clone());
            continue;
        };
        let next = bayes_update(posterior, row.p_case, row.p_control)?;
        trace.push(TraceStep {
            factor: obs.factor.clone(),
            value: obs.value.clone(),
            prior_before: posterior,
            posterior_after: next,
        });
        posterior = next;
    }
    Ok(RiskEstimate {
        posterior,
        trace,
        skipped,
    })
}

/// One-shot posterior from the products of likelihoods; independent of the
/// iterative fold and used to cross-check it.
pub fn closed_form_posterior(model: &RiskModel, observations: &[Observation]) -> Result<Probability, RiskError> {
    check_duplicates(observations)?;
    let (case, control) = observations
        .iter()
        .filter_map(|obs| model.lookup(obs))
        .fold((1.0, 1.0), |(c, n), row| (c * row.p_case.0, n * row.p_control.0));
    let prior = model.prior.0;
    let numerator = prior * case;
    let denominator = numerator + (1.0 - prior) * control;
    if denominator <= 0.0 {
        return Err(RiskError::ZeroDenominator);
    }
    Ok(Probability((numerator / denominator).clamp(0.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RiskLevel {
    HighRisk,
    Normal,
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskLevel::HighRisk => "HIGH_RISK",
            RiskLevel::Normal => "NORMAL",
        })
    }
}

/// `HighRisk` iff the posterior has reached the threshold (inclusive).
pub fn classify(estimate: &RiskEstimate, threshold: Probability) -> RiskLevel {
    if estimate.posterior.0 >= threshold.0 {
        RiskLevel::HighRisk
    } else {
        RiskLevel::Normal
    }
}
