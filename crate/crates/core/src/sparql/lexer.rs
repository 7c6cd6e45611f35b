use std::ops::Range;

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Bare word: keyword, function name or stray identifier.
    Word(String),
    /// `prefix:local`, unvalidated.
    PrefixedName { prefix: String, local: String },
    /// `?name`, stored without the sigil.
    Var(String),
    /// Quoted string with its optional suffix.
    Str { value: String, suffix: StrSuffix },
    Number(String),
    Punct(&'static str),
    /// `<...>` absolute IRI; outside the supported subset.
    IriRef(String),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrSuffix {
    None,
    Lang(String),
    Datatype(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Range<usize>,
}

impl Token {
    pub fn is_word(&self, kw: &str) -> bool {
        matches!(&self.kind, TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.kind, TokenKind::Punct(q) if *q == p)
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Word(w) => format!("`{w}`"),
            TokenKind::PrefixedName { prefix, local } => format!("`{prefix}:{local}`"),
            TokenKind::Var(v) => format!("`?{v}`"),
            TokenKind::Str { value, .. } => format!("string \"{value}\""),
            TokenKind::Number(n) => format!("number {n}"),
            TokenKind::Punct(p) => format!("`{p}`"),
            TokenKind::IriRef(i) => format!("`<{i}>`"),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

const PUNCTS: [&str; 17] = [
    "<=", ">=", "!=", "&&", "||", "{", "}", "(", ")", ".", ",", ";", "=", "<", ">", "*", "/",
];

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Splits query text into tokens. The final token is always `Eof`.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '#' {
            while i < src.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c == '?' || c == '$' {
            i += 1;
            let name_start = i;
            while let Some(ch) = src[i..].chars().next() {
                if !is_name_char(ch) {
                    break;
                }
                i += ch.len_utf8();
            }
            if i == name_start {
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["variable name"],
                    found: "`?`".into(),
                });
            }
            out.push(Token {
                kind: TokenKind::Var(src[name_start..i].to_string()),
                span: start..i,
            });
            continue;
        }
        if c == '"' || c == '\'' {
            let (value, end) = lex_string(src, i, c)?;
            i = end;
            let suffix = if src[i..].starts_with('@') {
                let tag_start = i + 1;
                i = tag_start;
                while i < src.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
                    i += 1;
                }
                if i == tag_start {
                    return Err(ParseError::Syntax {
                        offset: tag_start,
                        expected: vec!["language tag"],
                        found: describe_at(src, tag_start),
                    });
                }
                StrSuffix::Lang(src[tag_start..i].to_string())
            } else if src[i..].starts_with("^^") {
                let dt_start = i + 2;
                i = dt_start;
                while let Some(ch) = src[i..].chars().next() {
                    if !(is_name_char(ch) || ch == ':') {
                        break;
                    }
                    i += ch.len_utf8();
                }
                StrSuffix::Datatype(src[dt_start..i].to_string())
            } else {
                StrSuffix::None
            };
            out.push(Token {
                kind: TokenKind::Str { value, suffix },
                span: start..i,
            });
            continue;
        }
        let signed_digit = (c == '-' || c == '+') && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit());
        if c.is_ascii_digit() || signed_digit {
            i += 1;
            while i < src.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < src.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < src.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            out.push(Token {
                kind: TokenKind::Number(src[start..i].to_string()),
                span: start..i,
            });
            continue;
        }
        if c == '<' {
            // `<http://…>` vs. the less-than operator.
            let rest = &src[i + 1..];
            if rest.starts_with(|ch: char| ch.is_ascii_alphabetic()) {
                if let Some(close) = rest.find('>') {
                    let body = &rest[..close];
                    if body.contains(':') && !body.chars().any(char::is_whitespace) {
                        i += close + 2;
                        out.push(Token {
                            kind: TokenKind::IriRef(body.to_string()),
                            span: start..i,
                        });
                        continue;
                    }
                }
            }
        }
        if c.is_alphabetic() || c == '_' {
            while let Some(ch) = src[i..].chars().next() {
                if !is_name_char(ch) {
                    break;
                }
                i += ch.len_utf8();
            }
            let word = src[start..i].to_string();
            if src[i..].starts_with(':') {
                i += 1;
                let local_start = i;
                while let Some(ch) = src[i..].chars().next() {
                    if !(is_name_char(ch) || ch == '-') {
                        break;
                    }
                    i += ch.len_utf8();
                }
                out.push(Token {
                    kind: TokenKind::PrefixedName {
                        prefix: word,
                        local: src[local_start..i].to_string(),
                    },
                    span: start..i,
                });
            } else {
                out.push(Token {
                    kind: TokenKind::Word(word),
                    span: start..i,
                });
            }
            continue;
        }
        if let Some(p) = PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            i += p.len();
            out.push(Token {
                kind: TokenKind::Punct(p),
                span: start..i,
            });
            continue;
        }
        // Single-char punctuation that only ever appears in unsupported syntax.
        let other: Option<&'static str> = match c {
            '|' => Some("|"),
            '^' => Some("^"),
            '+' => Some("+"),
            '!' => Some("!"),
            '[' => Some("["),
            ']' => Some("]"),
            _ => None,
        };
        if let Some(p) = other {
            i += 1;
            out.push(Token {
                kind: TokenKind::Punct(p),
                span: start..i,
            });
            continue;
        }
        return Err(ParseError::Syntax {
            offset: start,
            expected: vec!["token"],
            found: format!("`{c}`"),
        });
    }
    out.push(Token {
        kind: TokenKind::Eof,
        span: src.len()..src.len(),
    });
    Ok(out)
}

fn describe_at(src: &str, at: usize) -> String {
    match src[at..].chars().next() {
        Some(c) => format!("`{c}`"),
        None => "end of input".into(),
    }
}

fn lex_string(src: &str, start: usize, quote: char) -> Result<(String, usize), ParseError> {
    let mut value = String::new();
    let mut chars = src[start + 1..].char_indices();
    while let Some((off, c)) = chars.next() {
        let at = start + 1 + off;
        match c {
            c if c == quote => return Ok((value, at + 1)),
            '\\' => match chars.next() {
                Some((_, 'n')) => value.push('\n'),
                Some((_, 't')) => value.push('\t'),
                Some((_, 'r')) => value.push('\r'),
                Some((_, e @ ('"' | '\'' | '\\'))) => value.push(e),
                Some((eoff, e)) => {
                    return Err(ParseError::Syntax {
                        offset: start + 1 + eoff,
                        expected: vec!["escape sequence"],
                        found: format!("`\\{e}`"),
                    })
                }
                None => break,
            },
            c => value.push(c),
        }
    }
    Err(ParseError::Syntax {
        offset: src.len(),
        expected: vec!["closing quote"],
        found: "end of input".into(),
    })
}
