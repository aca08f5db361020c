//! Department endpoints, IRI dereferencing and link traversal.
//!
//! Each department publishes its records under an IRI prefix. The registry
//! maps prefixes to either an in-process dataset or a remote base URL; remote
//! documents are fetched with `GET {base}/resource/{percent-encoded IRI}`.
//! The document for an IRI is the set of triples having it as subject.

mod traverse;

use std::sync::Arc;
use std::time::Duration;

use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use thiserror::Error;

use crate::graphstore::{parse_ntriples, Dataset, GraphName, Iri, Triple};
use crate::query::QueryError;

pub use traverse::{
    enrich_record, traverse_query, Department, Enrichment, FetchFailure, FetchPolicy, TraversalState,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FederationError {
    #[error("registry prefix must not be empty")]
    EmptyPrefix,
    #[error("duplicate registry prefix {0}")]
    DuplicatePrefix(String),
    #[error("no endpoint serves <{0}>")]
    NoEndpoint(Iri),
    #[error("fetching <{iri}> failed: {reason}")]
    Fetch { iri: Iri, reason: String },
    #[error("document for <{iri}> is not valid N-Triples: {reason}")]
    Parse { iri: Iri, reason: String },
    #[error("invalid fetch policy: {0}")]
    Policy(String),
    #[error("no seeds given")]
    NoSeeds,
    #[error("every seed failed to dereference: {0}")]
    AllSeedsFailed(String),
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Debug, Clone)]
pub enum Source {
    Local(Arc<Dataset>),
    /// Base URL without a trailing slash, e.g. `http://127.0.0.1:8080`.
    Remote(String),
}

#[derive(Debug, Clone, Default)]
pub struct EndpointRegistry {
    entries: Vec<(String, Source)>,
}

impl EndpointRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, prefix: impl Into<String>, source: Source) -> Result<(), FederationError> {
        let prefix = prefix.into();
        if prefix.is_empty() {
            return Err(FederationError::EmptyPrefix);
        }
        if self.entries.iter().any(|(p, _)| *p == prefix) {
            return Err(FederationError::DuplicatePrefix(prefix));
        }
        let source = match source {
            Source::Remote(url) => Source::Remote(url.trim_end_matches('/').to_string()),
            local => local,
        };
        self.entries.push((prefix, source));
        Ok(())
    }

    pub fn with(mut self, prefix: impl Into<String>, source: Source) -> Result<Self, FederationError> {
        self.register(prefix, source)?;
        Ok(self)
    }

    /// Longest registered prefix of `iri`.
    pub fn resolve(&self, iri: &str) -> Option<(&str, &Source)> {
        self.entries
            .iter()
            .filter(|(p, _)| iri.starts_with(p.as_str()))
            .max_by_key(|(p, _)| p.len())
            .map(|(p, s)| (p.as_str(), s))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Source)> {
        self.entries.iter().map(|(p, s)| (p.as_str(), s))
    }

    pub fn has_remote(&self) -> bool {
        self.entries.iter().any(|(_, s)| matches!(s, Source::Remote(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Document {
    Found(Vec<Triple>),
    NotFound,
}

impl Document {
    pub fn triples(&self) -> &[Triple] {
        match self {
            Document::Found(t) => t,
            Document::NotFound => &[],
        }
    }
}

/// URL of the document for `iri` at a remote base.
pub fn resource_url(base: &str, iri: &Iri) -> String {
    format!("{base}/resource/{}", utf8_percent_encode(iri.as_str(), NON_ALPHANUMERIC))
}

/// Fetches documents; holds the HTTP client when remote sources are in use.
#[derive(Debug, Clone)]
pub struct Fetcher {
    client: Option<reqwest::blocking::Client>,
}

impl Fetcher {
    pub fn new(registry: &EndpointRegistry, timeout_ms: u64) -> Result<Self, FederationError> {
        let client = if registry.has_remote() {
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_millis(timeout_ms))
                .connect_timeout(Duration::from_millis(timeout_ms))
                .build()
                .map_err(|e| FederationError::Policy(format!("http client: {e}")))?;
            Some(client)
        } else {
            None
        };
        Ok(Fetcher { client })
    }

    pub fn fetch(&self, registry: &EndpointRegistry, iri: &Iri) -> Result<Document, FederationError> {
        match registry.resolve(iri.as_str()) {
            Some((_, source)) => self.fetch_from(source, iri),
            None => Ok(Document::NotFound),
        }
    }

    /// Dereferences `iri` at a specific source, bypassing prefix resolution.
    pub fn fetch_from(&self, source: &Source, iri: &Iri) -> Result<Document, FederationError> {
        match source {
            Source::Local(ds) => Ok(Document::Found(ds.describe(iri))),
            Source::Remote(base) => {
                let fetch_err = |reason: String| FederationError::Fetch { iri: iri.clone(), reason };
                let client = self
                    .client
                    .as_ref()
                    .ok_or_else(|| fetch_err("no http client configured".into()))?;
                let url = resource_url(base, iri);
                log::debug!("GET {url}");
                let response = client
                    .get(&url)
                    .header(reqwest::header::ACCEPT, "application/n-triples")
                    .send()
                    .map_err(|e| fetch_err(e.to_string()))?;
                let status = response.status();
                if status == reqwest::StatusCode::NOT_FOUND {
                    return Ok(Document::NotFound);
                }
                if !status.is_success() {
                    return Err(fetch_err(format!("HTTP {status}")));
                }
                let body = response.text().map_err(|e| fetch_err(e.to_string()))?;
                let quads = parse_ntriples(&body, &GraphName::Default).map_err(|e| FederationError::Parse {
                    iri: iri.clone(),
                    reason: e.to_string(),
                })?;
                Ok(Document::Found(quads.iter().map(|q| q.triple()).collect()))
            }
        }
    }
}

/// Dereferences `iri` through the registry. An IRI under no registered
/// prefix yields [`Document::NotFound`].
pub fn dereference(iri: &Iri, registry: &EndpointRegistry, timeout_ms: u64) -> Result<Document, FederationError> {
    Fetcher::new(registry, timeout_ms)?.fetch(registry, iri)
}
