//! Breadth-first link traversal and per-department record enrichment.

use std::collections::BTreeSet;
use std::thread;

use serde::Serialize;

use super::{Document, EndpointRegistry, FederationError, Fetcher};
use crate::graphstore::{Dataset, GraphName, Iri, Quad, Triple};
use crate::query::{evaluate_query_with, EvalOptions, SelectQuery, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FetchPolicy {
    /// Upper bound on dereference attempts against registered endpoints.
    pub max_documents: usize,
    /// Seeds are depth 0; links found at depth d are fetched at d + 1.
    pub max_depth: usize,
    pub timeout_ms: u64,
    /// Concurrent fetches per batch.
    pub parallelism: usize,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            max_documents: 1000,
            max_depth: 4,
            timeout_ms: 5000,
            parallelism: 4,
        }
    }
}

impl FetchPolicy {
    pub fn check(&self) -> Result<(), FederationError> {
        if self.max_documents == 0 {
            return Err(FederationError::Policy("max_documents must be positive".into()));
        }
        if self.timeout_ms == 0 {
            return Err(FederationError::Policy("timeout_ms must be positive".into()));
        }
        if self.parallelism == 0 {
            return Err(FederationError::Policy("parallelism must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FetchFailure {
    pub iri: Iri,
    pub depth: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct TraversalState {
    /// Every IRI a dereference was attempted for, including unregistered ones.
    pub visited: BTreeSet<Iri>,
    /// Discovered but not fetched because of the depth or document budget.
    pub frontier: BTreeSet<(Iri, usize)>,
    /// One named graph per successfully dereferenced IRI.
    pub acquired: Dataset,
    pub failures: Vec<FetchFailure>,
    /// Visited IRIs with no endpoint or a 404.
    pub not_found: BTreeSet<Iri>,
    /// Fetches issued against registered endpoints.
    pub documents: usize,
}

struct Crawl<'a> {
    registry: &'a EndpointRegistry,
    fetcher: &'a Fetcher,
    policy: FetchPolicy,
    allow: &'a (dyn Fn(&Iri) -> bool + Sync),
}

fn object_links(triples: &[Triple]) -> impl Iterator<Item = &Iri> {
    triples.iter().filter_map(|t| t.object.as_iri())
}

impl Crawl<'_> {
    fn fetch_batch(&self, batch: &[Iri]) -> Vec<Result<Document, FederationError>> {
        if self.policy.parallelism <= 1 || batch.len() <= 1 {
            return batch.iter().map(|i| self.fetcher.fetch(self.registry, i)).collect();
        }
        let mut out = Vec::with_capacity(batch.len());
        for chunk in batch.chunks(self.policy.parallelism) {
            thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|i| s.spawn(move || self.fetcher.fetch(self.registry, i)))
                    .collect();
                out.extend(handles.into_iter().map(|h| h.join().expect("fetch thread panicked")));
            });
        }
        out
    }

    /// Runs the breadth-first loop starting with `level` at `depth`.
    fn run(&self, state: &mut TraversalState, level: BTreeSet<Iri>, mut depth: usize) {
        let mut level = level;
        loop {
            let mut batch = Vec::new();
            for iri in level {
                if state.visited.contains(&iri) || !(self.allow)(&iri) {
                    continue;
                }
                if self.registry.resolve(iri.as_str()).is_none() {
                    state.visited.insert(iri.clone());
                    state.not_found.insert(iri);
                    continue;
                }
                if state.documents >= self.policy.max_documents {
                    state.frontier.insert((iri, depth));
                    continue;
                }
                state.documents += 1;
                state.visited.insert(iri.clone());
                batch.push(iri);
            }
            if batch.is_empty() {
                break;
            }
            let results = self.fetch_batch(&batch);
            let mut next = BTreeSet::new();
            for (iri, result) in batch.into_iter().zip(results) {
                match result {
                    Ok(Document::Found(triples)) => {
                        for link in object_links(&triples) {
                            if !state.visited.contains(link) {
                                next.insert(link.clone());
                            }
                        }
                        let graph = GraphName::Named(iri.clone());
                        state.acquired.extend(triples.into_iter().map(|t| t.in_graph(graph.clone())));
                    }
                    Ok(Document::NotFound) => {
                        state.not_found.insert(iri);
                    }
                    Err(e) => {
                        log::warn!("{e}");
                        state.failures.push(FetchFailure {
                            iri,
                            depth,
                            error: e.to_string(),
                        });
                    }
                }
            }
            depth += 1;
            if depth > self.policy.max_depth {
                for iri in next {
                    if (self.allow)(&iri) && self.registry.resolve(iri.as_str()).is_some() {
                        state.frontier.insert((iri, depth));
                    }
                }
                break;
            }
            level = next;
        }
        let visited = &state.visited;
        state.frontier.retain(|(i, _)| !visited.contains(i));
    }
}

/// Evaluates `query` over the documents reachable from `seeds`.
///
/// Seeds are dereferenced at depth 0; every object-position IRI of an
/// acquired document is dereferenced at the next depth while within
/// `max_depth` and `max_documents`. Within a depth, IRIs are processed in
/// sorted order, so the budget cuts deterministically and the acquired
/// dataset does not depend on fetch completion order. Patterns match across
/// all acquired graphs. Fetch failures are recorded in the state; the call
/// fails only when every seed fails.
pub fn traverse_query(
    query: &SelectQuery,
    seeds: &[Iri],
    registry: &EndpointRegistry,
    policy: &FetchPolicy,
) -> Result<(Vec<Solution>, TraversalState), FederationError> {
    if seeds.is_empty() {
        return Err(FederationError::NoSeeds);
    }
    policy.check()?;
    query.check()?;
    let fetcher = Fetcher::new(registry, policy.timeout_ms)?;
    let crawl = Crawl {
        registry,
        fetcher: &fetcher,
        policy: *policy,
        allow: &|_| true,
    };
    let mut state = TraversalState::default();
    crawl.run(&mut state, seeds.iter().cloned().collect(), 0);

    let seed_set: BTreeSet<&Iri> = seeds.iter().collect();
    let failed: Vec<&FetchFailure> = state.failures.iter().filter(|f| seed_set.contains(&f.iri)).collect();
    if failed.len() == seed_set.len() {
        let reasons: Vec<String> = failed.iter().map(|f| f.error.clone()).collect();
        return Err(FederationError::AllSeedsFailed(reasons.join("; ")));
    }
    let solutions = evaluate_query_with(
        query,
        &state.acquired,
        EvalOptions {
            union_default_graph: true,
        },
    )?;
    Ok((solutions, state))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Department {
    pub name: String,
    /// Named graph receiving this department's triples.
    pub graph: Iri,
    /// IRI prefix of the department's resources; also its registry key.
    pub prefix: String,
}

#[derive(Debug, Clone, Default)]
pub struct Enrichment {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Gathers what each department knows about `patient`.
///
/// The patient's own document is stored in a graph named after the patient.
/// For each department, the patient IRI is dereferenced at the department's
/// endpoint, then links inside the department prefix are followed (from both
/// the department's answer and the patient document) within `policy`. All
/// triples acquired for a department go into its named graph.
pub fn enrich_record(
    patient: &Iri,
    departments: &[Department],
    registry: &EndpointRegistry,
    policy: &FetchPolicy,
) -> Result<Enrichment, FederationError> {
    policy.check()?;
    if registry.resolve(patient.as_str()).is_none() {
        return Err(FederationError::NoEndpoint(patient.clone()));
    }
    let fetcher = Fetcher::new(registry, policy.timeout_ms)?;
    let seed = fetcher.fetch(registry, patient)?;
    let mut out = Enrichment::default();
    let seed_graph = GraphName::Named(patient.clone());
    out.dataset
        .extend(seed.triples().iter().map(|t| t.clone().in_graph(seed_graph.clone())));

    for dept in departments {
        let source = match registry.resolve(&dept.prefix) {
            Some((_, s)) => s,
            None => {
                out.warnings
                    .push(format!("department {}: no endpoint for prefix {}", dept.name, dept.prefix));
                continue;
            }
        };
        let in_prefix = |i: &Iri| i.as_str().starts_with(dept.prefix.as_str());
        let mut state = TraversalState::default();
        state.visited.insert(patient.clone());
        state.documents = 1;
        let mut start: BTreeSet<Iri> = object_links(seed.triples()).filter(|i| in_prefix(i)).cloned().collect();
        let answer = fetcher.fetch_from(source, patient);
        let reached = match answer {
            Ok(doc) => {
                start.extend(object_links(doc.triples()).filter(|i| in_prefix(i)).cloned());
                let graph = GraphName::Named(patient.clone());
                state
                    .acquired
                    .extend(doc.triples().iter().map(|t| t.clone().in_graph(graph.clone())));
                true
            }
            Err(e) => {
                state.failures.push(FetchFailure {
                    iri: patient.clone(),
                    depth: 0,
                    error: e.to_string(),
                });
                false
            }
        };
        if policy.max_depth > 0 {
            let crawl = Crawl {
                registry,
                fetcher: &fetcher,
                policy: *policy,
                allow: &in_prefix,
            };
            crawl.run(&mut state, start, 1);
        }
        let fetched = state.documents;
        if !reached && state.failures.len() >= fetched {
            out.warnings.push(format!(
                "department {} unreachable: {}",
                dept.name, state.failures[0].error
            ));
            continue;
        }
        for f in &state.failures {
            out.warnings.push(format!("department {}: {}", dept.name, f.error));
        }
        let graph = GraphName::Named(dept.graph.clone());
        let triples: BTreeSet<Triple> = state.acquired.iter().map(Quad::triple).collect();
        out.dataset.extend(triples.into_iter().map(|t| t.in_graph(graph.clone())));
    }
    Ok(out)
}
