//! Tokenizer shared by the query and rule parsers.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Bare word: keyword, rule name, prefix label, `true`/`false`.
    Word(String),
    /// `prefix:local` outside angle brackets.
    PName(String, String),
    Var(String),
    Iri(String),
    Str(String),
    Number(String),
    Punct(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "{w}"),
            Tok::PName(p, l) => write!(f, "{p}:{l}"),
            Tok::Var(v) => write!(f, "?{v}"),
            Tok::Iri(i) => write!(f, "<{i}>"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Number(n) => write!(f, "{n}"),
            Tok::Punct(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct LexError {
    pub offset: usize,
    pub reason: String,
}

const PUNCTS: [&str; 16] = [
    "=>", "!=", "<=", ">=", "^^", "{", "}", "(", ")", ".", ",", ":", "*", "=", "<", ">",
];

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < src.len() {
        let rest = &src[i..];
        let c = rest.chars().next().unwrap_or('\0');
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '#' {
            i += rest.find('\n').unwrap_or(rest.len());
            continue;
        }
        let start = i;
        let tok = if c == '?' || c == '$' {
            let name: String = rest[1..].chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect();
            if name.is_empty() {
                return Err(LexError { offset: start, reason: "empty variable name".into() });
            }
            i += 1 + name.len();
            Tok::Var(name)
        } else if c == '<' && iri_end(rest).is_some() {
            let end = iri_end(rest).unwrap_or(0);
            i += end + 1;
            Tok::Iri(rest[1..end].to_string())
        } else if c == '"' {
            let (value, len) = lex_string(rest).map_err(|reason| LexError { offset: start, reason })?;
            i += len;
            Tok::Str(value)
        } else if c.is_ascii_digit()
            || ((c == '-' || c == '+' || c == '.')
                && rest[1..].starts_with(|d: char| d.is_ascii_digit()))
        {
            let mut len = 1;
            let mut seen_dot = c == '.';
            while let Some(&b) = bytes.get(i + len) {
                if b.is_ascii_digit() {
                    len += 1;
                } else if b == b'.' && !seen_dot && bytes.get(i + len + 1).is_some_and(u8::is_ascii_digit) {
                    seen_dot = true;
                    len += 1;
                } else {
                    break;
                }
            }
            i += len;
            Tok::Number(rest[..len].to_string())
        } else if c.is_alphabetic() || c == '_' {
            let word: String = rest.chars().take_while(|c| is_name_char(*c)).collect();
            let after = &rest[word.len()..];
            if let Some(local_rest) = after.strip_prefix(':') {
                let local: String = local_rest
                    .chars()
                    .take_while(|c| is_name_char(*c) || *c == '.' || *c == '/')
                    .collect();
                let local = local.trim_end_matches('.').to_string();
                if local.is_empty() {
                    i += word.len();
                    Tok::Word(word)
                } else {
                    i += word.len() + 1 + local.len();
                    Tok::PName(word, local)
                }
            } else {
                i += word.len();
                Tok::Word(word)
            }
        } else if let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            i += p.len();
            Tok::Punct(p)
        } else {
            return Err(LexError { offset: start, reason: format!("unexpected character {c:?}") });
        };
        out.push(Token { tok, offset: start });
    }
    Ok(out)
}

/// Index of the closing `>` when `rest` starts with an IRI reference.
/// An IRI reference has no whitespace, no nested `<`, and contains a `:`.
fn iri_end(rest: &str) -> Option<usize> {
    let body = &rest[1..];
    let end = body.find(|c: char| c == '>' || c == '<' || c == '"' || c.is_whitespace())?;
    (body.as_bytes()[end] == b'>' && body[..end].contains(':')).then_some(end + 1)
}

fn lex_string(rest: &str) -> Result<(String, usize), String> {
    let mut out = String::new();
    let mut chars = rest.char_indices().skip(1);
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Ok((out, i + 1)),
            '\\' => match chars.next().map(|(_, e)| e) {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('r') => out.push('\r'),
                Some(other) => return Err(format!("unknown escape \\{other}")),
                None => break,
            },
            '\n' => return Err("newline in string literal".into()),
            c => out.push(c),
        }
    }
    Err("unterminated string literal".into())
}
