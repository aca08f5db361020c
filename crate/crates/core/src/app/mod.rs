//! Configuration, the monitor pipeline and the HTTP service.

mod config;
mod server;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::federation::{enrich_record, EndpointRegistry, FederationError, Source};
use crate::graphstore::{parse_nquads, Dataset, GraphName, Iri, Literal, Quad, QuadPattern, Term};
use crate::ontology::{validate_record, Vocabulary};
use crate::query::{solve_bgp, GraphScope, PatternTerm, Prefixes, TriplePattern, Variable};
use crate::risk::{classify, estimate_risk, load_model, Observation, Probability, RiskEstimate, RiskLevel, RiskModel};
use crate::rules::{alarm_quads, collect_alarms, forward_chain, parse_rules_with, Alarm, Rule};

pub use config::{Config, RegistryEntry, RegistryTarget};
pub use server::{router, serve, AppState};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("no model configured")]
    NoModel,
    #[error(transparent)]
    Federation(#[from] FederationError),
    #[error("{0}")]
    Pipeline(String),
}

impl AppError {
    fn file(path: &Path, e: impl std::fmt::Display) -> AppError {
        AppError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Reads an N-Quads file; lines without a graph label go to `graph`.
pub fn load_quads(path: &Path, graph: &GraphName) -> Result<Vec<Quad>, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::file(path, e))?;
    let quads = parse_nquads(&text).map_err(|e| AppError::file(path, e))?;
    Ok(quads
        .into_iter()
        .map(|q| match q.graph {
            GraphName::Default => Quad { graph: graph.clone(), ..q },
            GraphName::Named(_) => q,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatientEstimate {
    pub patient: Iri,
    pub level: RiskLevel,
    pub estimate: RiskEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub patients_processed: usize,
    pub threshold: Probability,
    pub estimates: Vec<PatientEstimate>,
    pub alarms: Vec<Alarm>,
    pub warnings: Vec<String>,
    pub inferred_quads: usize,
}

impl MonitorReport {
    /// Pretty JSON with a trailing newline; stable for identical inputs.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct MonitorRun {
    pub report: MonitorReport,
    /// Store plus enrichment, inferences, risk scores and alarm records.
    pub dataset: Dataset,
}

/// Everything loaded from a config: store, vocabulary, model, rules and
/// endpoint registry.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: Config,
    pub vocab: Vocabulary,
    pub store: Dataset,
    pub model: Option<RiskModel>,
    pub rules: Vec<Rule>,
    pub registry: EndpointRegistry,
}

impl Pipeline {
    pub fn load(config: Config) -> Result<Pipeline, AppError> {
        let vocab = Vocabulary::with_namespace(&config.namespace).map_err(|e| AppError::Config {
            path: String::new(),
            line: 0,
            message: format!("namespace: {e}"),
        })?;
        let mut store = Dataset::new();
        for (graph, path) in &config.stores {
            store.extend(load_quads(path, graph)?);
        }
        let model = match &config.model_path {
            Some(p) => Some(load_model(p, &vocab).map_err(|e| AppError::file(p, e))?),
            None => None,
        };
        let prefixes = Prefixes::new().with("onto", vocab.namespace());
        let rules = match &config.rules_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| AppError::file(p, e))?;
                parse_rules_with(&text, &prefixes).map_err(|e| AppError::file(p, e))?
            }
            None => Vec::new(),
        };
        let mut registry = EndpointRegistry::new();
        for entry in &config.registry {
            let source = match &entry.target {
                RegistryTarget::Local(p) => {
                    Source::Local(Arc::new(load_quads(p, &GraphName::Default)?.into_iter().collect()))
                }
                RegistryTarget::Remote(url) => Source::Remote(url.clone()),
            };
            registry.register(entry.prefix.clone(), source)?;
        }
        config.fetch.check()?;
        Ok(Pipeline {
            config,
            vocab,
            store,
            model,
            rules,
            registry,
        })
    }

    pub fn from_path(path: &Path) -> Result<Pipeline, AppError> {
        Pipeline::load(Config::load(path)?)
    }

    /// `onto:` bound to the vocabulary namespace.
    pub fn prefixes(&self) -> Prefixes {
        Prefixes::new().with("onto", self.vocab.namespace())
    }

    /// The configured override, else the model's threshold.
    pub fn threshold(&self) -> Result<Probability, AppError> {
        match (self.config.threshold, &self.model) {
            (Some(t), _) => Ok(t),
            (None, Some(m)) => Ok(m.threshold()),
            (None, None) => Err(AppError::NoModel),
        }
    }

    /// Subjects typed `Patient` in the store, sorted.
    pub fn patients(&self) -> Vec<Iri> {
        let pattern = QuadPattern {
            predicate: Some(self.vocab.rdf_type().clone()),
            object: Some(self.vocab.term("Patient").into()),
            ..QuadPattern::any()
        };
        let set: BTreeSet<Iri> = self.store.match_quads(&pattern).into_iter().map(|q| q.subject).collect();
        set.into_iter().collect()
    }

    /// Runs the pipeline over every patient in the store.
    pub fn run(&self) -> Result<MonitorRun, AppError> {
        self.run_for(&self.patients())
    }

    /// Enrich, validate, chain, estimate, score and alarm for `patients`.
    pub fn run_for(&self, patients: &[Iri]) -> Result<MonitorRun, AppError> {
        let model = self.model.as_ref().ok_or(AppError::NoModel)?;
        let threshold = self.threshold()?;
        let mut warnings = Vec::new();
        let mut working = self.store.clone();
        let mut assessed = Vec::new();

        for patient in patients {
            if self.registry.resolve(patient.as_str()).is_none() {
                warnings.push(format!("<{patient}>: no endpoint serves the record; using the local store only"));
            } else {
                match enrich_record(patient, &self.config.departments, &self.registry, &self.config.fetch) {
                    Ok(enriched) => {
                        warnings.extend(enriched.warnings.into_iter().map(|w| format!("<{patient}>: {w}")));
                        working.extend(enriched.dataset.iter().cloned().collect::<Vec<_>>());
                    }
                    Err(e) => {
                        warnings.push(format!("<{patient}>: skipped: {e}"));
                        continue;
                    }
                }
            }
            let report = validate_record(&working, patient, &self.vocab);
            warnings.extend(report.violations.iter().map(|v| format!("<{patient}>: {v}")));
            assessed.push(patient.clone());
        }

        let chained = forward_chain(&self.rules, &working)
            .map_err(|e| AppError::Pipeline(format!("forward chaining: {e}")))?;
        let inferred_quads = chained.inferred;
        let mut working = chained.dataset;

        let risk_score = self.vocab.term("riskScore");
        let mut estimates = Vec::new();
        for patient in &assessed {
            let observations = self.observations(&working, patient, &mut warnings);
            let estimate = match estimate_risk(model, &observations) {
                Ok(e) => e,
                Err(e) => {
                    warnings.push(format!("<{patient}>: skipped: {e}"));
                    continue;
                }
            };
            let old = working.match_quads(&QuadPattern {
                subject: Some(patient.clone()),
                predicate: Some(risk_score.clone()),
                ..QuadPattern::any()
            });
            for q in &old {
                working.remove_quad(q);
            }
            let score = Literal::decimal_from_f64(estimate.posterior.value(), 12).expect("probability is finite");
            working.add_quad(Quad::new(patient.clone(), risk_score.clone(), score, GraphName::Default));
            estimates.push(PatientEstimate {
                patient: patient.clone(),
                level: classify(&estimate, threshold),
                estimate,
            });
        }

        let collected = collect_alarms(&working, threshold, &self.vocab)
            .map_err(|e| AppError::Pipeline(format!("alarms: {e}")))?;
        for p in &collected.missing_doctor {
            warnings.push(format!("<{p}>: at or above threshold but no treatedBy doctor"));
        }
        working.extend(alarm_quads(&collected.alarms, &self.vocab));

        Ok(MonitorRun {
            report: MonitorReport {
                patients_processed: patients.len(),
                threshold,
                estimates,
                alarms: collected.alarms,
                warnings,
                inferred_quads,
            },
            dataset: working,
        })
    }

    /// Distinct (factor, value) observations linked from `patient` in any graph.
    fn observations(&self, dataset: &Dataset, patient: &Iri, warnings: &mut Vec<String>) -> Vec<Observation> {
        let var = |n: &str| PatternTerm::Var(Variable::new(n));
        let pattern = |s: PatternTerm, p: &str, o: PatternTerm| TriplePattern {
            subject: s,
            predicate: PatternTerm::Term(self.vocab.term(p).into()),
            object: o,
            scope: GraphScope::Union,
        };
        let bgp = [
            pattern(PatternTerm::Term(patient.clone().into()), "hasObservation", var("o")),
            pattern(var("o"), "observedFactor", var("f")),
            pattern(var("o"), "observedValue", var("v")),
        ];
        let mut out = BTreeSet::new();
        for s in solve_bgp(&bgp, dataset) {
            match (s.get_named("f"), s.get_named("v")) {
                (Some(Term::Iri(f)), Some(Term::Literal(v))) => {
                    out.insert(Observation::new(f.clone(), v.lexical()));
                }
                _ => warnings.push(format!(
                    "<{patient}>: observation {} ignored: factor must be an IRI and value a literal",
                    s.get_named("o").map(Term::to_string).unwrap_or_default()
                )),
            }
        }
        out.into_iter().collect()
    }
}

/// Loads everything named by `config` and runs the monitor once.
pub fn run_monitor(config: &Config) -> Result<MonitorReport, AppError> {
    Ok(Pipeline::load(config.clone())?.run()?.report)
}
