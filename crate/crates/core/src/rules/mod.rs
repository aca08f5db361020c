//! Forward-chaining rules over the quad store.
//!
//! Rule file syntax, one rule per `RULE` keyword (rules may span lines):
//!
//! ```text
//! PREFIX onto: <http://example.org/brca/onto#>
//! RULE smoker: (?p onto:hasObservation ?o), (?o onto:observedFactor onto:Smoking)
//!     => (?p onto:exposedTo onto:Tobacco)
//! RULE high: (?p onto:riskScore ?r) WHERE ?r >= 0.5 => (?p onto:flag "high")
//! ```
//!
//! Antecedent patterns match the merge of all graphs unless prefixed with
//! `DEFAULT`, which restricts them to the default graph. Inferred quads are
//! written to the default graph.

mod alarms;

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::graphstore::{Dataset, GraphName, Quad, Term};
use crate::query::lexer::Tok;
use crate::query::parser::Cursor;
use crate::query::{
    apply_filters, solve_bgp, Filter, GraphScope, PatternTerm, Prefixes, QueryError, Solution,
    TriplePattern, Variable,
};

pub use alarms::{alarm_quads, collect_alarms, Alarm, AlarmCollection};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RuleError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("rule {rule}: variable {variable} is not bound by the antecedent")]
    NotRangeRestricted { rule: String, variable: String },
    #[error("rule {rule}: {message}")]
    Invalid { rule: String, message: String },
    #[error("rule {rule}: guard on ?{variable} compares a non-numeric value with an ordering operator")]
    GuardType { rule: String, variable: String },
    #[error("riskScore of <{patient}> is not a decimal probability")]
    RiskScoreType { patient: String },
}

/// Consequent triple template.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Template {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub antecedent: Vec<TriplePattern>,
    pub guards: Vec<Filter>,
    pub consequent: Vec<Template>,
}

impl Rule {
    /// Builds a rule, enforcing range restriction: every guard and
    /// consequent variable appears in the antecedent.
    pub fn new(
        name: impl Into<String>,
        antecedent: Vec<TriplePattern>,
        guards: Vec<Filter>,
        consequent: Vec<Template>,
    ) -> Result<Self, RuleError> {
        let rule = Rule {
            name: name.into(),
            antecedent,
            guards,
            consequent,
        };
        rule.check()?;
        Ok(rule)
    }

    fn check(&self) -> Result<(), RuleError> {
        let invalid = |message: &str| RuleError::Invalid {
            rule: self.name.clone(),
            message: message.to_string(),
        };
        if self.antecedent.is_empty() {
            return Err(invalid("empty antecedent"));
        }
        if self.consequent.is_empty() {
            return Err(invalid("empty consequent"));
        }
        for p in &self.antecedent {
            if !matches!(p.scope, GraphScope::Default | GraphScope::Union) {
                return Err(invalid("antecedent patterns are scoped to the default graph or all graphs"));
            }
        }
        let bound: BTreeSet<&Variable> = self.antecedent.iter().flat_map(TriplePattern::variables).collect();
        let unbound = |v: &Variable| RuleError::NotRangeRestricted {
            rule: self.name.clone(),
            variable: v.to_string(),
        };
        for g in &self.guards {
            if !bound.contains(&g.variable) {
                return Err(unbound(&g.variable));
            }
        }
        for t in &self.consequent {
            for pt in [&t.subject, &t.predicate, &t.object] {
                if let PatternTerm::Var(v) = pt {
                    if !bound.contains(v) {
                        return Err(unbound(v));
                    }
                }
            }
            if matches!(t.subject, PatternTerm::Term(Term::Literal(_)))
                || matches!(t.predicate, PatternTerm::Term(Term::Literal(_)))
            {
                return Err(invalid("consequent subject and predicate must be IRIs"));
            }
        }
        Ok(())
    }

    /// Instantiates the consequent for one antecedent match. Templates whose
    /// subject or predicate binds to a literal are dropped.
    fn instantiate(&self, solution: &Solution) -> Vec<Quad> {
        let value = |pt: &PatternTerm| -> Option<Term> {
            match pt {
                PatternTerm::Term(t) => Some(t.clone()),
                PatternTerm::Var(v) => solution.get(v).cloned(),
            }
        };
        self.consequent
            .iter()
            .filter_map(|t| {
                let subject = value(&t.subject)?.as_iri()?.clone();
                let predicate = value(&t.predicate)?.as_iri()?.clone();
                let object = value(&t.object)?;
                Some(Quad::new(subject, predicate, object, GraphName::Default))
            })
            .collect()
    }
}

pub fn parse_rules(text: &str) -> Result<Vec<Rule>, RuleError> {
    parse_rules_with(text, &Prefixes::new())
}

/// Parses a rule file; `prefixes` are available in addition to any `PREFIX`
/// lines in the file.
pub fn parse_rules_with(text: &str, prefixes: &Prefixes) -> Result<Vec<Rule>, RuleError> {
    let line_of = |offset: usize| text[..offset.min(text.len())].matches('\n').count() + 1;
    let syntax = |e: QueryError| match e {
        QueryError::Syntax {
            offset,
            expected,
            found,
        } => RuleError::Syntax {
            line: line_of(offset),
            message: format!("expected {expected}, found {found}"),
        },
        other => RuleError::Syntax {
            line: 0,
            message: other.to_string(),
        },
    };
    let mut cur = Cursor::new(text, prefixes.clone()).map_err(syntax)?;
    cur.prefix_decls().map_err(syntax)?;
    let mut rules = Vec::new();
    let mut names = HashSet::new();
    while !cur.at_end() {
        let start = cur.offset();
        let rule = parse_rule(&mut cur).map_err(syntax)?;
        if !names.insert(rule.name.clone()) {
            return Err(RuleError::Syntax {
                line: line_of(start),
                message: format!("duplicate rule name {}", rule.name),
            });
        }
        rule.check()?;
        rules.push(rule);
    }
    Ok(rules)
}

fn parse_rule(cur: &mut Cursor) -> Result<Rule, QueryError> {
    cur.expect_keyword("RULE")?;
    let name = match cur.peek() {
        Some(Tok::Word(w)) => w.clone(),
        Some(Tok::Number(n)) => n.clone(),
        _ => return Err(cur.error("a rule name")),
    };
    cur.next();
    cur.expect_punct(":")?;
    let mut antecedent = Vec::new();
    loop {
        let scope = if cur.eat_keyword("DEFAULT") {
            GraphScope::Default
        } else {
            GraphScope::Union
        };
        let (subject, predicate, object) = parenthesized(cur)?;
        antecedent.push(TriplePattern {
            subject,
            predicate,
            object,
            scope,
        });
        if !cur.eat_punct(",") {
            break;
        }
    }
    let mut guards = Vec::new();
    if cur.eat_keyword("WHERE") {
        loop {
            guards.push(cur.comparison()?);
            if !cur.eat_punct(",") {
                break;
            }
        }
    }
    cur.expect_punct("=>")?;
    let mut consequent = Vec::new();
    loop {
        let (subject, predicate, object) = parenthesized(cur)?;
        consequent.push(Template {
            subject,
            predicate,
            object,
        });
        if !cur.eat_punct(",") {
            break;
        }
    }
    if !cur.at_end() && !cur.is_keyword("RULE") {
        return Err(cur.error("',' or the next RULE"));
    }
    Ok(Rule {
        name,
        antecedent,
        guards,
        consequent,
    })
}

fn parenthesized(cur: &mut Cursor) -> Result<(PatternTerm, PatternTerm, PatternTerm), QueryError> {
    cur.expect_punct("(")?;
    let s = cur.pattern_term()?;
    let p = cur.pattern_term()?;
    let o = cur.pattern_term()?;
    cur.expect_punct(")")?;
    Ok((s, p, o))
}

#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub dataset: Dataset,
    pub inferred: usize,
}

/// Least fixpoint of `rules` over `dataset` by naive iteration: each round
/// evaluates every rule against the current dataset and adds all new
/// consequents at once, until a round adds nothing.
pub fn forward_chain(rules: &[Rule], dataset: &Dataset) -> Result<ChainOutcome, RuleError> {
    let mut current = dataset.clone();
    let mut inferred = 0;
    loop {
        let mut fresh: BTreeSet<Quad> = BTreeSet::new();
        for rule in rules {
            let mut solutions = solve_bgp(&rule.antecedent, &current);
            apply_filters(&rule.guards, &mut solutions).map_err(|e| match e {
                QueryError::Type { variable } => RuleError::GuardType {
                    rule: rule.name.clone(),
                    variable,
                },
                other => RuleError::Invalid {
                    rule: rule.name.clone(),
                    message: other.to_string(),
                },
            })?;
            for s in &solutions {
                fresh.extend(rule.instantiate(s).into_iter().filter(|q| !current.contains(q)));
            }
        }
        if fresh.is_empty() {
            break;
        }
        log::debug!("forward chaining round added {} quads", fresh.len());
        inferred += current.extend(fresh);
    }
    Ok(ChainOutcome {
        dataset: current,
        inferred,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphstore::{Iri, Literal};

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    const TRANSITIVE: &str = "RULE trans: (?a <http://ex/link> ?b), (?b <http://ex/link> ?c) => (?a <http://ex/link> ?c)";

    fn chain(n: usize) -> Dataset {
        (1..n)
            .map(|i| {
                Quad::new(
                    iri(&format!("http://ex/n{}", i - 1)),
                    iri("http://ex/link"),
                    iri(&format!("http://ex/n{i}")),
                    GraphName::Default,
                )
            })
            .collect()
    }

    #[test]
    fn parses_example_rule() {
        let rules = parse_rules(
            "RULE r1: (?p <onto:hasObservation> ?o), (?o <onto:observedFactor> <onto:Smoking>) => (?p <onto:exposedTo> <onto:Tobacco>)",
        )
        .unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].name, "r1");
        assert_eq!(rules[0].antecedent.len(), 2);
        assert_eq!(rules[0].consequent.len(), 1);
        assert_eq!(
            rules[0].consequent[0].object,
            PatternTerm::from(iri("onto:Tobacco"))
        );
    }

    #[test]
    fn prefix_expansion_in_brackets() {
        let prefixes = Prefixes::new().with("onto", "http://ex/onto#");
        let rules = parse_rules_with("RULE r: (?p <onto:a> ?o) => (?p onto:b ?o)", &prefixes).unwrap();
        assert_eq!(rules[0].antecedent[0].predicate, PatternTerm::from(iri("http://ex/onto#a")));
        assert_eq!(rules[0].consequent[0].predicate, PatternTerm::from(iri("http://ex/onto#b")));
    }

    #[test]
    fn unbound_consequent_variable() {
        let err = parse_rules("RULE r: (?a <http://ex/p> ?b) => (?a <http://ex/q> ?z)").unwrap_err();
        assert_eq!(
            err,
            RuleError::NotRangeRestricted { rule: "r".into(), variable: "?z".into() }
        );
        let err = parse_rules("RULE r: (?a <http://ex/p> ?b) WHERE ?w > 1 => (?a <http://ex/q> ?b)").unwrap_err();
        assert!(matches!(err, RuleError::NotRangeRestricted { .. }));
    }

    #[test]
    fn empty_input() {
        assert!(parse_rules("").unwrap().is_empty());
        assert!(parse_rules("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn syntax_error_line() {
        let text = "RULE a: (?x <http://ex/p> ?y) => (?x <http://ex/q> ?y)\n\nRULE b: (?x <http://ex/p> ?y) (?x <http://ex/q> ?y)";
        match parse_rules(text) {
            Err(RuleError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multi_line_rules_and_guards() {
        let text = "PREFIX ex: <http://ex/>\nRULE hi:\n  (?p ex:risk ?r)\n  WHERE ?r >= 0.5, ?r != 0.9\n  => (?p ex:flag \"high\")\nRULE lo: DEFAULT (?p ex:risk ?r) WHERE ?r < 0.5 => (?p ex:flag \"low\")";
        let rules = parse_rules(text).unwrap();
        assert_eq!(rules.len(), 2);
        assert_eq!(rules[0].guards.len(), 2);
        assert_eq!(rules[1].antecedent[0].scope, GraphScope::Default);
    }

    #[test]
    fn no_rules_no_change() {
        let ds = chain(4);
        let out = forward_chain(&[], &ds).unwrap();
        assert_eq!(out.inferred, 0);
        assert_eq!(out.dataset, ds);
    }

    #[test]
    fn transitive_chain() {
        let rules = parse_rules(TRANSITIVE).unwrap();
        for n in 2..8 {
            let out = forward_chain(&rules, &chain(n)).unwrap();
            assert_eq!(out.inferred, n * (n - 1) / 2 - (n - 1));
            let again = forward_chain(&rules, &out.dataset).unwrap();
            assert_eq!(again.inferred, 0);
        }
    }

    #[test]
    fn inferred_quads_go_to_default_graph() {
        let rules = parse_rules(TRANSITIVE).unwrap();
        let g = GraphName::Named(iri("http://dept"));
        let ds: Dataset = chain(3).iter().map(|q| Quad { graph: g.clone(), ..q.clone() }).collect();
        let out = forward_chain(&rules, &ds).unwrap();
        assert_eq!(out.inferred, 1);
        assert_eq!(out.dataset.graph_len(&GraphName::Default), 1);
        assert_eq!(out.dataset.graph_len(&g), 2);
    }

    #[test]
    fn guards_filter_and_type_errors() {
        let rules = parse_rules(
            "RULE hi: (?p <http://ex/risk> ?r) WHERE ?r >= 0.5 => (?p <http://ex/flag> \"high\")",
        )
        .unwrap();
        let mut ds = Dataset::new();
        for (s, r) in [("http://ex/a", "0.64"), ("http://ex/b", "0.2"), ("http://ex/c", "0.5")] {
            ds.add_quad(Quad::new(iri(s), iri("http://ex/risk"), Literal::decimal(r).unwrap(), GraphName::Default));
        }
        let out = forward_chain(&rules, &ds).unwrap();
        assert_eq!(out.inferred, 2);
        ds.add_quad(Quad::new(iri("http://ex/d"), iri("http://ex/risk"), iri("http://ex/oops"), GraphName::Default));
        assert!(matches!(forward_chain(&rules, &ds), Err(RuleError::GuardType { .. })));
    }

    #[test]
    fn literal_bound_subject_is_skipped() {
        let rules = parse_rules("RULE flip: (?a <http://ex/p> ?b) => (?b <http://ex/q> ?a)").unwrap();
        let mut ds = Dataset::new();
        ds.add_quad(Quad::new(iri("http://ex/a"), iri("http://ex/p"), Literal::string("x"), GraphName::Default));
        ds.add_quad(Quad::new(iri("http://ex/a"), iri("http://ex/p"), iri("http://ex/b"), GraphName::Default));
        let out = forward_chain(&rules, &ds).unwrap();
        assert_eq!(out.inferred, 1);
    }
}
