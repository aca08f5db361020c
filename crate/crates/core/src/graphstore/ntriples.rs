//! Line-oriented N-Triples / N-Quads reader and canonical writer.
//!
//! Grammar subset: IRIs in angle brackets, plain and `^^`-typed literals.
//! No blank nodes, no language tags. Parsing is all-or-nothing.

use super::term::{Datatype, GraphName, Iri, Literal, Quad, Term, Triple};
use super::{Dataset, GraphError};

/// Parses N-Triples into quads of `graph`, in line order.
pub fn parse_ntriples(text: &str, graph: &GraphName) -> Result<Vec<Quad>, GraphError> {
    parse_lines(text, |line_no, parsed| match parsed.graph {
        None => Ok(parsed.triple.in_graph(graph.clone())),
        Some(_) => Err(syntax(line_no, "graph term not allowed in N-Triples")),
    })
}

/// Parses N-Quads; lines without a graph term land in the default graph.
pub fn parse_nquads(text: &str) -> Result<Vec<Quad>, GraphError> {
    parse_lines(text, |_, parsed| {
        let graph = parsed.graph.map_or(GraphName::Default, GraphName::Named);
        Ok(parsed.triple.in_graph(graph))
    })
}

/// Sorted N-Quads: by graph, subject, predicate, then object serialization.
/// The default graph sorts first.
pub fn serialize_canonical(dataset: &Dataset) -> String {
    let mut rows: Vec<(&str, &str, &str, String, &Quad)> = dataset
        .iter()
        .map(|q| {
            let g = q.graph.as_iri().map_or("", Iri::as_str);
            (g, q.subject.as_str(), q.predicate.as_str(), q.object.to_string(), q)
        })
        .collect();
    rows.sort_by(|a, b| (a.0, a.1, a.2, &a.3).cmp(&(b.0, b.1, b.2, &b.3)));
    let mut out = String::new();
    for (_, _, _, _, q) in rows {
        out.push_str(&q.to_string());
        out.push('\n');
    }
    out
}

/// N-Triples text for `triples` in the given order.
pub fn serialize_triples<'a, I: IntoIterator<Item = &'a Triple>>(triples: I) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

struct ParsedLine {
    triple: Triple,
    graph: Option<Iri>,
}

fn parse_lines<F>(text: &str, mut finish: F) -> Result<Vec<Quad>, GraphError>
where
    F: FnMut(usize, ParsedLine) -> Result<Quad, GraphError>,
{
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = LineParser::new(line, line_no).parse()?;
        out.push(finish(line_no, parsed)?);
    }
    Ok(out)
}

fn syntax(line: usize, reason: impl Into<String>) -> GraphError {
    GraphError::Syntax {
        line,
        reason: reason.into(),
    }
}

struct LineParser<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> LineParser<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        LineParser { rest: text, line }
    }

    fn err(&self, reason: impl Into<String>) -> GraphError {
        syntax(self.line, reason)
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn parse(mut self) -> Result<ParsedLine, GraphError> {
        let subject = self.iri_term("subject")?;
        let predicate = self.iri_term("predicate")?;
        self.skip_ws();
        let object = self.term()?;
        self.skip_ws();
        let graph = if self.rest.starts_with('<') {
            let g = self.iri()?;
            self.skip_ws();
            Some(g)
        } else {
            None
        };
        let Some(after) = self.rest.strip_prefix('.') else {
            return Err(self.err("expected '.' at end of statement"));
        };
        self.rest = after;
        self.skip_ws();
        if !self.rest.is_empty() && !self.rest.starts_with('#') {
            return Err(self.err(format!("unexpected trailing content {:?}", self.rest)));
        }
        Ok(ParsedLine {
            triple: Triple {
                subject,
                predicate,
                object,
            },
            graph,
        })
    }

    fn iri_term(&mut self, position: &str) -> Result<Iri, GraphError> {
        self.skip_ws();
        if self.rest.starts_with("_:") {
            return Err(self.err("blank nodes are not supported"));
        }
        if !self.rest.starts_with('<') {
            return Err(self.err(format!("expected IRI in {position} position")));
        }
        self.iri()
    }

    fn iri(&mut self) -> Result<Iri, GraphError> {
        let body = &self.rest[1..];
        let Some(end) = body.find('>') else {
            return Err(self.err("unterminated IRI"));
        };
        let value = &body[..end];
        self.rest = &body[end + 1..];
        Iri::new(value).map_err(|e| self.err(e.to_string()))
    }

    fn term(&mut self) -> Result<Term, GraphError> {
        if self.rest.starts_with('<') {
            return Ok(Term::Iri(self.iri()?));
        }
        if self.rest.starts_with("_:") {
            return Err(self.err("blank nodes are not supported"));
        }
        if !self.rest.starts_with('"') {
            return Err(self.err("expected IRI or literal in object position"));
        }
        let lexical = self.quoted()?;
        if self.rest.starts_with('@') {
            return Err(self.err("language-tagged literals are not supported"));
        }
        let datatype = if let Some(after) = self.rest.strip_prefix("^^") {
            self.rest = after;
            if !self.rest.starts_with('<') {
                return Err(self.err("expected datatype IRI after ^^"));
            }
            let dt = self.iri()?;
            Datatype::from_iri(dt.as_str())
                .ok_or_else(|| self.err(format!("unsupported datatype <{dt}>")))?
        } else {
            Datatype::String
        };
        Literal::new(lexical, datatype)
            .map(Term::Literal)
            .map_err(|e| self.err(e.to_string()))
    }

    fn quoted(&mut self) -> Result<String, GraphError> {
        let mut out = String::new();
        let mut chars = self.rest[1..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.rest = &self.rest[1 + i + 1..];
                    return Ok(out);
                }
                '\\' => {
                    let Some((_, e)) = chars.next() else { break };
                    match e {
                        '"' => out.push('"'),
                        '\\' => out.push('\\'),
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        'u' | 'U' => {
                            let width = if e == 'u' { 4 } else { 8 };
                            let hex: String = chars.by_ref().take(width).map(|(_, c)| c).collect();
                            let ch = (hex.len() == width)
                                .then(|| u32::from_str_radix(&hex, 16).ok())
                                .flatten()
                                .and_then(char::from_u32)
                                .ok_or_else(|| self.err(format!("bad \\{e} escape")))?;
                            out.push(ch);
                        }
                        other => return Err(self.err(format!("unknown escape \\{other}"))),
                    }
                }
                c => out.push(c),
            }
        }
        Err(self.err("unterminated string literal"))
    }
}
