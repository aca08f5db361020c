//! Recursive-descent parser for the query subset.

use crate::graphstore::{Datatype, Iri, Literal, Term};

use super::lexer::{tokenize, Tok, Token};
use super::{
    Comparator, Filter, GraphScope, PatternTerm, Prefixes, Projection, QueryError, SelectQuery,
    TriplePattern, Variable,
};

/// Parses a query with no predeclared prefixes.
pub fn parse_query(text: &str) -> Result<SelectQuery, QueryError> {
    parse_query_with(text, &Prefixes::new())
}

/// Parses a query; `prefixes` seeds the prefix table before any `PREFIX`
/// declarations in the text.
pub fn parse_query_with(text: &str, prefixes: &Prefixes) -> Result<SelectQuery, QueryError> {
    let mut cur = Cursor::new(text, prefixes.clone())?;
    cur.prefix_decls()?;
    cur.expect_keyword("SELECT")?;
    let projection = if cur.eat_punct("*") {
        Projection::All
    } else {
        let mut vars = Vec::new();
        while let Some(Tok::Var(_)) = cur.peek() {
            vars.push(cur.var()?);
        }
        if vars.is_empty() {
            return Err(cur.error("'*' or a variable"));
        }
        Projection::Vars(vars)
    };
    cur.expect_keyword("WHERE")?;
    cur.expect_punct("{")?;
    let mut query = SelectQuery {
        projection,
        patterns: Vec::new(),
        filters: Vec::new(),
        limit: None,
    };
    cur.block(&GraphScope::Default, &mut query)?;
    cur.expect_punct("}")?;
    if cur.eat_keyword("LIMIT") {
        let offset = cur.offset();
        match cur.next() {
            Some(Tok::Number(n)) => {
                query.limit = Some(n.parse().map_err(|_| QueryError::Syntax {
                    offset,
                    expected: "a non-negative integer".into(),
                    found: n.clone(),
                })?);
            }
            _ => return Err(cur.error_at(offset, "an integer after LIMIT")),
        }
    }
    cur.expect_end()?;
    query.check()?;
    Ok(query)
}

/// Token cursor with the term grammar shared by queries and rule files.
pub(crate) struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    pub prefixes: Prefixes,
}

impl Cursor {
    pub fn new(text: &str, prefixes: Prefixes) -> Result<Self, QueryError> {
        let tokens = tokenize(text).map_err(|e| QueryError::Syntax {
            offset: e.offset,
            expected: "a valid token".into(),
            found: e.reason,
        })?;
        Ok(Cursor {
            tokens,
            pos: 0,
            end: text.len(),
            prefixes,
        })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    pub fn next(&mut self) -> Option<&Tok> {
        let t = self.tokens.get(self.pos).map(|t| &t.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.offset)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    pub fn error(&self, expected: &str) -> QueryError {
        self.error_at(self.offset(), expected)
    }

    pub fn error_at(&self, offset: usize, expected: &str) -> QueryError {
        let found = self
            .tokens
            .iter()
            .find(|t| t.offset == offset)
            .map_or_else(|| "end of input".to_string(), |t| format!("'{}'", t.tok));
        QueryError::Syntax {
            offset,
            expected: expected.to_string(),
            found,
        }
    }

    pub fn expect_end(&self) -> Result<(), QueryError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.pos += 1;
        }
        hit
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<(), QueryError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(&format!("'{p}'")))
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        let hit = self.is_keyword(kw);
        if hit {
            self.pos += 1;
        }
        hit
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(kw))
        }
    }

    /// `PREFIX label: <namespace>` declarations.
    pub fn prefix_decls(&mut self) -> Result<(), QueryError> {
        while self.eat_keyword("PREFIX") {
            let label = match self.next() {
                Some(Tok::Word(w)) => w.clone(),
                _ => return Err(self.error_at(self.prev_offset(), "a prefix label")),
            };
            self.expect_punct(":")?;
            let ns = match self.next() {
                Some(Tok::Iri(i)) => i.clone(),
                _ => return Err(self.error_at(self.prev_offset(), "a namespace IRI")),
            };
            self.prefixes.insert(label, ns);
        }
        Ok(())
    }

    fn prev_offset(&self) -> usize {
        self.tokens
            .get(self.pos.saturating_sub(1))
            .map_or(self.end, |t| t.offset)
    }

    pub fn var(&mut self) -> Result<Variable, QueryError> {
        match self.peek() {
            Some(Tok::Var(name)) => {
                let v = Variable::try_new(name).ok_or_else(|| self.error("a variable"))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error("a variable")),
        }
    }

    fn resolve_iri(&self, offset: usize, raw: &str) -> Result<Iri, QueryError> {
        let expanded = self.prefixes.expand(raw);
        Iri::new(expanded.as_deref().unwrap_or(raw)).map_err(|e| QueryError::Syntax {
            offset,
            expected: "a valid IRI".into(),
            found: e.to_string(),
        })
    }

    fn resolve_pname(&self, offset: usize, label: &str, local: &str) -> Result<Iri, QueryError> {
        match self.prefixes.get(label) {
            Some(ns) => self.resolve_iri(offset, &format!("{ns}{local}")),
            None => Err(QueryError::Syntax {
                offset,
                expected: "a declared prefix".into(),
                found: format!("'{label}:'"),
            }),
        }
    }

    pub fn iri(&mut self) -> Result<Iri, QueryError> {
        let offset = self.offset();
        let iri = match self.peek() {
            Some(Tok::Iri(raw)) => self.resolve_iri(offset, raw)?,
            Some(Tok::PName(label, local)) => self.resolve_pname(offset, label, local)?,
            _ => return Err(self.error("an IRI")),
        };
        self.pos += 1;
        Ok(iri)
    }

    /// A concrete term: IRI, string or typed literal, number, or boolean.
    pub fn constant(&mut self) -> Result<Term, QueryError> {
        let offset = self.offset();
        let term = match self.peek().cloned() {
            Some(Tok::Iri(_)) | Some(Tok::PName(..)) => return self.iri().map(Term::Iri),
            Some(Tok::Number(n)) => Term::Literal(
                Literal::decimal(&n).map_err(|_| self.error("a decimal number"))?,
            ),
            Some(Tok::Word(w)) if w == "true" || w == "false" => {
                Term::Literal(Literal::boolean(w == "true"))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                if self.eat_punct("^^") {
                    let dt_offset = self.offset();
                    let dt = self.iri()?;
                    let datatype = Datatype::from_iri(dt.as_str()).ok_or_else(|| {
                        self.error_at(dt_offset, "a supported datatype IRI")
                    })?;
                    let lit = Literal::new(&s, datatype).map_err(|e| QueryError::Syntax {
                        offset,
                        expected: "a well-formed literal".into(),
                        found: e.to_string(),
                    })?;
                    return Ok(Term::Literal(lit));
                }
                return Ok(Term::Literal(Literal::string(s)));
            }
            Some(Tok::Word(_)) => return Err(self.error("a term (unknown keyword)")),
            _ => return Err(self.error("a term")),
        };
        self.pos += 1;
        Ok(term)
    }

    pub fn pattern_term(&mut self) -> Result<PatternTerm, QueryError> {
        if let Some(Tok::Var(_)) = self.peek() {
            return self.var().map(PatternTerm::Var);
        }
        self.constant().map(PatternTerm::Term)
    }

    pub fn comparator(&mut self) -> Result<Comparator, QueryError> {
        let op = match self.peek() {
            Some(Tok::Punct("=")) => Comparator::Eq,
            Some(Tok::Punct("!=")) => Comparator::Ne,
            Some(Tok::Punct("<")) => Comparator::Lt,
            Some(Tok::Punct("<=")) => Comparator::Le,
            Some(Tok::Punct(">")) => Comparator::Gt,
            Some(Tok::Punct(">=")) => Comparator::Ge,
            _ => return Err(self.error("a comparison operator")),
        };
        self.pos += 1;
        Ok(op)
    }

    /// `?var op constant`, the body shared by FILTER and rule guards.
    pub fn comparison(&mut self) -> Result<Filter, QueryError> {
        let variable = self.var()?;
        let op = self.comparator()?;
        let constant = self.constant()?;
        Ok(Filter {
            variable,
            op,
            constant,
        })
    }

    fn block(&mut self, scope: &GraphScope, query: &mut SelectQuery) -> Result<(), QueryError> {
        let mut triples = 0;
        loop {
            if self.is_punct("}") || self.at_end() {
                break;
            }
            if self.eat_keyword("FILTER") {
                self.expect_punct("(")?;
                let f = self.comparison()?;
                self.expect_punct(")")?;
                query.filters.push(f);
                self.eat_punct(".");
            } else if self.is_keyword("GRAPH") {
                if *scope != GraphScope::Default {
                    return Err(self.error("a triple pattern (GRAPH blocks do not nest)"));
                }
                self.pos += 1;
                let inner = match self.peek() {
                    Some(Tok::Var(_)) => GraphScope::Var(self.var()?),
                    _ => GraphScope::Named(self.iri()?),
                };
                self.expect_punct("{")?;
                self.block(&inner, query)?;
                self.expect_punct("}")?;
                self.eat_punct(".");
                triples += 1;
            } else {
                let subject = self.pattern_term()?;
                let predicate = self.pattern_term()?;
                let object = self.pattern_term()?;
                query.patterns.push(TriplePattern {
                    subject,
                    predicate,
                    object,
                    scope: scope.clone(),
                });
                triples += 1;
                if !self.eat_punct(".")
                    && !self.is_punct("}")
                    && !self.is_keyword("FILTER")
                    && !self.is_keyword("GRAPH")
                {
                    return Err(self.error("'.'"));
                }
            }
        }
        if triples == 0 {
            return Err(self.error("a triple pattern"));
        }
        Ok(())
    }
}
