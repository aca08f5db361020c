//! In-memory named-graph quad store.
//!
//! Quads live in one ordered set; three secondary indexes keyed on
//! `(graph, subject)`, `(graph, predicate)` and `(graph, object)` answer
//! pattern lookups without scanning. A per-graph counter lets wildcard-graph
//! lookups fan out over the known graphs only.

mod ntriples;
mod term;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

pub use ntriples::{parse_nquads, parse_ntriples, serialize_canonical, serialize_triples};
pub use term::{
    Datatype, Decimal, GraphName, Iri, Literal, Quad, Term, Triple, RDF_TYPE, XSD_BOOLEAN,
    XSD_DATETIME, XSD_DECIMAL, XSD_STRING,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GraphError {
    #[error("invalid IRI {value:?}: {reason}")]
    InvalidIri { value: String, reason: &'static str },
    #[error("invalid literal {lexical:?} for datatype <{datatype}>")]
    InvalidLiteral { lexical: String, datatype: String },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

/// A quad pattern; `None` is a wildcard.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuadPattern {
    pub subject: Option<Iri>,
    pub predicate: Option<Iri>,
    pub object: Option<Term>,
    pub graph: Option<GraphName>,
}

impl QuadPattern {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn matches(&self, quad: &Quad) -> bool {
        self.subject.as_ref().is_none_or(|s| *s == quad.subject)
            && self.predicate.as_ref().is_none_or(|p| *p == quad.predicate)
            && self.object.as_ref().is_none_or(|o| *o == quad.object)
            && self.graph.as_ref().is_none_or(|g| *g == quad.graph)
    }
}

type Index<K> = HashMap<(GraphName, K), BTreeSet<Quad>>;

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    quads: BTreeSet<Quad>,
    by_subject: Index<Iri>,
    by_predicate: Index<Iri>,
    by_object: Index<Term>,
    graphs: BTreeMap<GraphName, usize>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.quads == other.quads
    }
}

impl Eq for Dataset {}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    pub fn contains(&self, quad: &Quad) -> bool {
        self.quads.contains(quad)
    }

    /// Inserts a quad; returns `true` iff it was not already present.
    pub fn add_quad(&mut self, quad: Quad) -> bool {
        if self.quads.contains(&quad) {
            return false;
        }
        let g = quad.graph.clone();
        insert_index(&mut self.by_subject, (g.clone(), quad.subject.clone()), &quad);
        insert_index(&mut self.by_predicate, (g.clone(), quad.predicate.clone()), &quad);
        insert_index(&mut self.by_object, (g.clone(), quad.object.clone()), &quad);
        *self.graphs.entry(g).or_insert(0) += 1;
        self.quads.insert(quad);
        true
    }

    /// Removes a quad; returns `true` iff it was present.
    pub fn remove_quad(&mut self, quad: &Quad) -> bool {
        if !self.quads.remove(quad) {
            return false;
        }
        let g = &quad.graph;
        remove_index(&mut self.by_subject, (g.clone(), quad.subject.clone()), quad);
        remove_index(&mut self.by_predicate, (g.clone(), quad.predicate.clone()), quad);
        remove_index(&mut self.by_object, (g.clone(), quad.object.clone()), quad);
        if let Some(n) = self.graphs.get_mut(g) {
            *n -= 1;
            if *n == 0 {
                self.graphs.remove(g);
            }
        }
        true
    }

    pub fn extend<I: IntoIterator<Item = Quad>>(&mut self, quads: I) -> usize {
        quads.into_iter().filter(|q| self.add_quad(q.clone())).count()
    }

    /// All quads in `Quad` order.
    pub fn iter(&self) -> impl Iterator<Item = &Quad> {
        self.quads.iter()
    }

    /// Graph names currently holding at least one quad.
    pub fn graph_names(&self) -> impl Iterator<Item = &GraphName> {
        self.graphs.keys()
    }

    pub fn graph_len(&self, graph: &GraphName) -> usize {
        self.graphs.get(graph).copied().unwrap_or(0)
    }

    /// Every quad matching `pattern`, in `Quad` order.
    pub fn match_quads(&self, pattern: &QuadPattern) -> Vec<Quad> {
        let mut out: Vec<Quad> = Vec::new();
        match &pattern.graph {
            Some(g) => self.match_in_graph(g, pattern, &mut out),
            None => {
                if pattern.subject.is_none()
                    && pattern.predicate.is_none()
                    && pattern.object.is_none()
                {
                    return self.quads.iter().cloned().collect();
                }
                for g in self.graphs.keys() {
                    self.match_in_graph(g, pattern, &mut out);
                }
                out.sort();
            }
        }
        out
    }

    /// Upper bound on `match_quads(pattern).len()` read from index sizes.
    pub fn estimate(&self, pattern: &QuadPattern) -> usize {
        let graphs: Vec<&GraphName> = match &pattern.graph {
            Some(g) => vec![g],
            None => self.graphs.keys().collect(),
        };
        graphs
            .into_iter()
            .map(|g| {
                let mut best = self.graph_len(g);
                if let Some(s) = &pattern.subject {
                    best = best.min(index_len(&self.by_subject, g, s));
                }
                if let Some(p) = &pattern.predicate {
                    best = best.min(index_len(&self.by_predicate, g, p));
                }
                if let Some(o) = &pattern.object {
                    best = best.min(index_len(&self.by_object, g, o));
                }
                best
            })
            .sum()
    }

    fn match_in_graph(&self, g: &GraphName, pattern: &QuadPattern, out: &mut Vec<Quad>) {
        // Pick the smallest applicable index bucket, then filter.
        let key = |k| (g.clone(), k);
        let mut buckets: Vec<Option<&BTreeSet<Quad>>> = Vec::with_capacity(3);
        if let Some(s) = &pattern.subject {
            buckets.push(self.by_subject.get(&key(s.clone())));
        }
        if let Some(p) = &pattern.predicate {
            buckets.push(self.by_predicate.get(&key(p.clone())));
        }
        if let Some(o) = &pattern.object {
            buckets.push(self.by_object.get(&(g.clone(), o.clone())));
        }
        if buckets.is_empty() {
            out.extend(self.quads.iter().filter(|q| q.graph == *g).cloned());
            return;
        }
        // A missing bucket means some concrete position has no match.
        let Some(buckets) = buckets.into_iter().collect::<Option<Vec<_>>>() else {
            return;
        };
        if let Some(bucket) = buckets.into_iter().min_by_key(|b| b.len()) {
            out.extend(bucket.iter().filter(|q| pattern.matches(q)).cloned());
        }
    }

    /// Distinct triples with `subject` as subject, across all graphs.
    pub fn describe(&self, subject: &Iri) -> Vec<Triple> {
        let pattern = QuadPattern {
            subject: Some(subject.clone()),
            ..QuadPattern::any()
        };
        let triples: BTreeSet<Triple> = self
            .match_quads(&pattern)
            .into_iter()
            .map(|q| q.triple())
            .collect();
        triples.into_iter().collect()
    }

    /// Checks that every index entry refers to a stored quad and every stored
    /// quad is reachable from each index.
    pub fn verify_indexes(&self) -> bool {
        let index_total = |idx_sizes: usize| idx_sizes == self.quads.len();
        let sizes = [
            self.by_subject.values().map(BTreeSet::len).sum::<usize>(),
            self.by_predicate.values().map(BTreeSet::len).sum::<usize>(),
            self.by_object.values().map(BTreeSet::len).sum::<usize>(),
            self.graphs.values().sum::<usize>(),
        ];
        if !sizes.into_iter().all(index_total) {
            return false;
        }
        self.quads.iter().all(|q| {
            let g = q.graph.clone();
            self.by_subject
                .get(&(g.clone(), q.subject.clone()))
                .is_some_and(|b| b.contains(q))
                && self
                    .by_predicate
                    .get(&(g.clone(), q.predicate.clone()))
                    .is_some_and(|b| b.contains(q))
                && self
                    .by_object
                    .get(&(g, q.object.clone()))
                    .is_some_and(|b| b.contains(q))
        })
    }
}

impl FromIterator<Quad> for Dataset {
    fn from_iter<I: IntoIterator<Item = Quad>>(iter: I) -> Self {
        let mut ds = Dataset::new();
        for q in iter {
            ds.add_quad(q);
        }
        ds
    }
}

fn insert_index<K: std::hash::Hash + Eq>(index: &mut Index<K>, key: (GraphName, K), quad: &Quad) {
    index.entry(key).or_default().insert(quad.clone());
}

fn remove_index<K: std::hash::Hash + Eq>(index: &mut Index<K>, key: (GraphName, K), quad: &Quad) {
    if let Some(bucket) = index.get_mut(&key) {
        bucket.remove(quad);
        if bucket.is_empty() {
            index.remove(&key);
        }
    }
}

fn index_len<K: std::hash::Hash + Eq + Clone>(index: &Index<K>, g: &GraphName, k: &K) -> usize {
    index
        .get(&(g.clone(), k.clone()))
        .map(BTreeSet::len)
        .unwrap_or(0)
}
