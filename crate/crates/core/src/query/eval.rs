//! Index nested-loop evaluation of basic graph patterns.

use std::collections::BTreeSet;

use crate::graphstore::{Dataset, GraphName, QuadPattern, Term, Triple};

use super::{
    Comparator, Filter, GraphScope, PatternTerm, QueryError, SelectQuery, Solution, TriplePattern,
    Variable,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Treat patterns scoped to the default graph as matching the merge of
    /// all graphs.
    pub union_default_graph: bool,
}

pub fn evaluate_query(query: &SelectQuery, dataset: &Dataset) -> Result<Vec<Solution>, QueryError> {
    evaluate_query_with(query, dataset, EvalOptions::default())
}

/// Joins, filters, projects, sorts by serialized bindings, then truncates.
pub fn evaluate_query_with(
    query: &SelectQuery,
    dataset: &Dataset,
    options: EvalOptions,
) -> Result<Vec<Solution>, QueryError> {
    query.check()?;
    for f in &query.filters {
        if f.op.is_ordering() && !is_numeric(&f.constant) {
            return Err(QueryError::Type {
                variable: f.variable.name().to_string(),
            });
        }
    }
    let patterns: Vec<TriplePattern> = query
        .patterns
        .iter()
        .map(|p| match (&p.scope, options.union_default_graph) {
            (GraphScope::Default, true) => TriplePattern {
                scope: GraphScope::Union,
                ..p.clone()
            },
            _ => p.clone(),
        })
        .collect();
    let mut solutions = solve_bgp(&patterns, dataset);
    apply_filters(&query.filters, &mut solutions)?;
    let vars = query.projected_variables();
    let mut keyed: Vec<(Vec<String>, Solution)> = solutions
        .into_iter()
        .map(|s| {
            let key = vars
                .iter()
                .map(|v| s.get(v).map(Term::to_string).unwrap_or_default())
                .collect();
            (key, s.project(&vars))
        })
        .collect();
    keyed.sort();
    let mut out: Vec<Solution> = keyed.into_iter().map(|(_, s)| s).collect();
    if let Some(limit) = query.limit {
        out.truncate(limit);
    }
    Ok(out)
}

/// Keeps solutions passing every filter. Filters are checked in order, each
/// over all solutions, so the reported type error is deterministic.
pub(crate) fn apply_filters(filters: &[Filter], solutions: &mut Vec<Solution>) -> Result<(), QueryError> {
    for f in filters {
        let mut kept = Vec::with_capacity(solutions.len());
        for s in solutions.drain(..) {
            let value = s.get(&f.variable).ok_or_else(|| {
                QueryError::Semantic(format!("filter variable {} is unbound", f.variable))
            })?;
            let pass = compare_terms(value, f.op, &f.constant).ok_or_else(|| QueryError::Type {
                variable: f.variable.name().to_string(),
            })?;
            if pass {
                kept.push(s);
            }
        }
        *solutions = kept;
    }
    Ok(())
}

fn is_numeric(t: &Term) -> bool {
    t.as_literal().is_some_and(|l| l.is_numeric())
}

/// Evaluates `value op constant`.
///
/// Ordering operators need two `xsd:decimal` literals and compare exactly;
/// `None` signals a type error. `=`/`!=` compare numerically when both
/// sides are decimals and by term identity otherwise.
pub fn compare_terms(value: &Term, op: Comparator, constant: &Term) -> Option<bool> {
    let numeric = value
        .as_literal()
        .and_then(|l| l.as_decimal())
        .zip(constant.as_literal().and_then(|l| l.as_decimal()));
    match (op, numeric) {
        (Comparator::Eq, Some((a, b))) => Some(a == b),
        (Comparator::Ne, Some((a, b))) => Some(a != b),
        (Comparator::Eq, None) => Some(value == constant),
        (Comparator::Ne, None) => Some(value != constant),
        (_, None) => None,
        (Comparator::Lt, Some((a, b))) => Some(a < b),
        (Comparator::Le, Some((a, b))) => Some(a <= b),
        (Comparator::Gt, Some((a, b))) => Some(a > b),
        (Comparator::Ge, Some((a, b))) => Some(a >= b),
    }
}

/// All solutions of the conjunction of `patterns` (a multiset, unordered).
///
/// Patterns are joined greedily: smallest estimated match count first, then
/// preferring patterns that share an already-bound variable.
pub fn solve_bgp(patterns: &[TriplePattern], dataset: &Dataset) -> Vec<Solution> {
    let order = join_order(patterns, dataset);
    let ordered: Vec<&TriplePattern> = order.into_iter().map(|i| &patterns[i]).collect();
    let mut out = Vec::new();
    extend(&ordered, dataset, Solution::new(), &mut out);
    out
}

fn join_order(patterns: &[TriplePattern], dataset: &Dataset) -> Vec<usize> {
    let estimates: Vec<usize> = patterns
        .iter()
        .map(|p| dataset.estimate(&to_quad_pattern(p, &Solution::new())))
        .collect();
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut bound: BTreeSet<&Variable> = BTreeSet::new();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let connected = |i: &usize| patterns[*i].variables().any(|v| bound.contains(v));
        let pick = remaining
            .iter()
            .copied()
            .filter(|i| order.is_empty() || connected(i))
            .min_by_key(|i| (estimates[*i], *i))
            .or_else(|| remaining.iter().copied().min_by_key(|i| (estimates[*i], *i)))
            .unwrap_or(remaining[0]);
        remaining.retain(|i| *i != pick);
        bound.extend(patterns[pick].variables());
        order.push(pick);
    }
    order
}

fn extend(patterns: &[&TriplePattern], dataset: &Dataset, partial: Solution, out: &mut Vec<Solution>) {
    let Some((first, rest)) = patterns.split_first() else {
        out.push(partial);
        return;
    };
    for (triple, graph) in matches(first, dataset, &partial) {
        let mut next = partial.clone();
        if unify(first, &triple, graph.as_ref(), &mut next) {
            extend(rest, dataset, next, out);
        }
    }
}

/// Candidate matches for `pattern` under the bindings in `partial`.
fn matches(pattern: &TriplePattern, dataset: &Dataset, partial: &Solution) -> Vec<(Triple, Option<GraphName>)> {
    let resolved = |t: &PatternTerm| -> Option<Option<Term>> {
        match t {
            PatternTerm::Term(term) => Some(Some(term.clone())),
            PatternTerm::Var(v) => Some(partial.get(v).cloned()),
        }
    };
    // Bound subject/predicate/graph values that are literals can never match.
    let (Some(s), Some(p)) = (resolved(&pattern.subject), resolved(&pattern.predicate)) else {
        return Vec::new();
    };
    if s.as_ref().is_some_and(|t| t.as_iri().is_none()) || p.as_ref().is_some_and(|t| t.as_iri().is_none()) {
        return Vec::new();
    }
    if let GraphScope::Var(v) = &pattern.scope {
        if partial.get(v).is_some_and(|t| t.as_iri().is_none()) {
            return Vec::new();
        }
    }
    let qp = to_quad_pattern(pattern, partial);
    let quads = dataset.match_quads(&qp);
    match &pattern.scope {
        GraphScope::Union => {
            let distinct: BTreeSet<Triple> = quads.into_iter().map(|q| q.triple()).collect();
            distinct.into_iter().map(|t| (t, None)).collect()
        }
        GraphScope::Var(_) => quads
            .into_iter()
            .filter(|q| q.graph != GraphName::Default)
            .map(|q| (q.triple(), Some(q.graph)))
            .collect(),
        _ => quads.into_iter().map(|q| (q.triple(), None)).collect(),
    }
}

fn to_quad_pattern(pattern: &TriplePattern, partial: &Solution) -> QuadPattern {
    let value = |t: &PatternTerm| -> Option<Term> {
        match t {
            PatternTerm::Term(term) => Some(term.clone()),
            PatternTerm::Var(v) => partial.get(v).cloned(),
        }
    };
    let iri_of = |t: Option<Term>| t.and_then(|t| t.as_iri().cloned());
    let graph = match &pattern.scope {
        GraphScope::Default => Some(GraphName::Default),
        GraphScope::Named(g) => Some(GraphName::Named(g.clone())),
        GraphScope::Var(v) => partial
            .get(v)
            .and_then(|t| t.as_iri().cloned())
            .map(GraphName::Named),
        GraphScope::Union => None,
    };
    QuadPattern {
        subject: iri_of(value(&pattern.subject)),
        predicate: iri_of(value(&pattern.predicate)),
        object: value(&pattern.object),
        graph,
    }
}

fn unify(pattern: &TriplePattern, triple: &Triple, graph: Option<&GraphName>, sol: &mut Solution) -> bool {
    let positions = [
        (&pattern.subject, Term::Iri(triple.subject.clone())),
        (&pattern.predicate, Term::Iri(triple.predicate.clone())),
        (&pattern.object, triple.object.clone()),
    ];
    for (pt, value) in positions {
        match pt {
            PatternTerm::Var(v) => {
                if !sol.bind(v, value) {
                    return false;
                }
            }
            PatternTerm::Term(t) => {
                if *t != value {
                    return false;
                }
            }
        }
    }
    if let (GraphScope::Var(v), Some(GraphName::Named(g))) = (&pattern.scope, graph) {
        return sol.bind(v, Term::Iri(g.clone()));
    }
    true
}
