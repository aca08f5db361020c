//! SELECT queries over basic graph patterns.
//!
//! Supported: `SELECT` with `*` or explicit variables, triple patterns,
//! `GRAPH` scoping by IRI or variable, single-comparison `FILTER`s and
//! `LIMIT`. Results are returned in a deterministic order.

mod eval;
pub(crate) mod lexer;
pub(crate) mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graphstore::{Iri, Term};

pub use eval::{compare_terms, evaluate_query, evaluate_query_with, solve_bgp, EvalOptions};
pub(crate) use eval::apply_filters;
pub use parser::{parse_query, parse_query_with};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QueryError {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("semantic error: {0}")]
    Semantic(String),
    #[error("type error: filter on ?{variable} compares a non-numeric value with an ordering operator")]
    Type { variable: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(Arc<str>);

impl Variable {
    /// Panics on names that are empty or not alphanumeric-plus-underscore.
    pub fn new(name: &str) -> Self {
        Self::try_new(name).unwrap_or_else(|| panic!("invalid variable name {name:?}"))
    }

    pub fn try_new(name: &str) -> Option<Self> {
        let valid = !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_');
        valid.then(|| Variable(Arc::from(name)))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(Variable),
    Term(Term),
}

impl PatternTerm {
    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }
}

impl From<Variable> for PatternTerm {
    fn from(v: Variable) -> Self {
        PatternTerm::Var(v)
    }
}

impl From<Iri> for PatternTerm {
    fn from(iri: Iri) -> Self {
        PatternTerm::Term(Term::Iri(iri))
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

/// Which graph(s) a triple pattern is matched against.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GraphScope {
    Default,
    Named(Iri),
    /// Ranges over named graphs, binding the graph IRI.
    Var(Variable),
    /// Merge of all graphs, default included; each distinct triple matches once.
    Union,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
    pub scope: GraphScope,
}

impl TriplePattern {
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
        scope: GraphScope,
    ) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
            scope,
        }
    }

    /// Variables in subject, predicate, object, graph order.
    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        let graph = match &self.scope {
            GraphScope::Var(v) => Some(v),
            _ => None,
        };
        [&self.subject, &self.predicate, &self.object]
            .into_iter()
            .filter_map(PatternTerm::as_var)
            .chain(graph)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn is_ordering(self) -> bool {
        !matches!(self, Comparator::Eq | Comparator::Ne)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Filter {
    pub variable: Variable,
    pub op: Comparator,
    pub constant: Term,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    All,
    Vars(Vec<Variable>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectQuery {
    pub projection: Projection,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Filter>,
    pub limit: Option<usize>,
}

impl SelectQuery {
    /// Every pattern variable, in order of first appearance.
    pub fn pattern_variables(&self) -> Vec<Variable> {
        let mut seen = BTreeSet::new();
        self.patterns
            .iter()
            .flat_map(TriplePattern::variables)
            .filter(|v| seen.insert((*v).clone()))
            .cloned()
            .collect()
    }

    /// Output columns: the explicit projection, or all pattern variables for `*`.
    pub fn projected_variables(&self) -> Vec<Variable> {
        match &self.projection {
            Projection::All => self.pattern_variables(),
            Projection::Vars(vars) => vars.clone(),
        }
    }

    /// Checks that projected and filtered variables are bound by some pattern,
    /// and that `LIMIT` is positive.
    pub fn check(&self) -> Result<(), QueryError> {
        let bound: BTreeSet<Variable> = self.pattern_variables().into_iter().collect();
        if let Projection::Vars(vars) = &self.projection {
            if let Some(v) = vars.iter().find(|v| !bound.contains(*v)) {
                return Err(QueryError::Semantic(format!(
                    "projected variable {v} does not appear in any pattern"
                )));
            }
        }
        if let Some(f) = self.filters.iter().find(|f| !bound.contains(&f.variable)) {
            return Err(QueryError::Semantic(format!(
                "filter variable {} does not appear in any pattern",
                f.variable
            )));
        }
        if self.limit == Some(0) {
            return Err(QueryError::Semantic("LIMIT must be positive".into()));
        }
        for p in &self.patterns {
            if matches!(p.subject, PatternTerm::Term(Term::Literal(_))) {
                return Err(QueryError::Semantic("literal in subject position".into()));
            }
            if matches!(p.predicate, PatternTerm::Term(Term::Literal(_))) {
                return Err(QueryError::Semantic("literal in predicate position".into()));
            }
        }
        Ok(())
    }
}

/// One row of variable bindings.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution(BTreeMap<Variable, Term>);

impl Solution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &Variable) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn get_named(&self, name: &str) -> Option<&Term> {
        self.0.iter().find(|(k, _)| k.name() == name).map(|(_, t)| t)
    }

    /// Binds `var`; returns `false` on conflict with an existing binding.
    pub fn bind(&mut self, var: &Variable, term: Term) -> bool {
        match self.0.get(var) {
            Some(existing) => *existing == term,
            None => {
                self.0.insert(var.clone(), term);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter()
    }

    pub fn project(&self, vars: &[Variable]) -> Solution {
        Solution(
            vars.iter()
                .filter_map(|v| self.0.get(v).map(|t| (v.clone(), t.clone())))
                .collect(),
        )
    }
}

impl FromIterator<(Variable, Term)> for Solution {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Self {
        Solution(iter.into_iter().collect())
    }
}

/// Prefix label to namespace IRI mapping used when parsing `prefix:local`
/// names, including the `<prefix:local>` bracketed form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Prefixes(BTreeMap<String, String>);

impl Prefixes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, namespace: impl Into<String>) {
        self.0.insert(label.into(), namespace.into());
    }

    pub fn with(mut self, label: impl Into<String>, namespace: impl Into<String>) -> Self {
        self.insert(label, namespace);
        self
    }

    pub fn get(&self, label: &str) -> Option<&str> {
        self.0.get(label).map(String::as_str)
    }

    /// Expands `label:local` if `label` is declared; otherwise returns `None`.
    pub fn expand(&self, value: &str) -> Option<String> {
        let (label, local) = value.split_once(':')?;
        if local.starts_with("//") {
            return None;
        }
        self.get(label).map(|ns| format!("{ns}{local}"))
    }
}

/// Tab-separated rendering: a header of `?var` names, then one row per
/// solution with N-Triples terms. Unbound cells are empty.
pub fn render_tsv(query: &SelectQuery, solutions: &[Solution]) -> String {
    let vars = query.projected_variables();
    let mut out = vars.iter().map(Variable::to_string).collect::<Vec<_>>().join("\t");
    out.push('\n');
    for s in solutions {
        let row: Vec<String> = vars
            .iter()
            .map(|v| s.get(v).map(Term::to_string).unwrap_or_default())
            .collect();
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}
