//! Recursive-descent parser for the query subset.
//!
//! ```text
//! query     ::= ( select | "ASK" ) "WHERE"? group order? limit?
//! select    ::= "SELECT" "DISTINCT"? ( count | var+ )
//! count     ::= "(" "COUNT" "(" "DISTINCT"? var ")" ( "AS" var )? ")"
//! group     ::= "{" item ( "."? item )* "."? "}"
//! item      ::= term term term | "FILTER" "(" fexpr ")"
//! fexpr     ::= ("CONTAINS" | "STRSTARTS") "(" term "," term ")"
//!             | "LANG" "(" term ")" "=" term
//!             | "YEAR" "(" term ")" cmp term
//!             | term cmp term
//! order     ::= "ORDER" "BY" ( ("ASC" | "DESC") "(" var ")" | var )
//! limit     ::= "LIMIT" integer
//! ```
//!
//! Keywords are case-insensitive; IRIs and variables are not.

use super::ast::*;
use super::lexer::{tokenize, StrSuffix, Token, TokenKind};
use super::ParseError;

/// Byte offsets of the parsed nodes, used to position diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceMap {
    pub form: usize,
    pub projection: Vec<usize>,
    pub patterns: Vec<usize>,
    pub filters: Vec<usize>,
    pub order_by: Option<usize>,
    pub limit: Option<usize>,
}

pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    parse_query_with_spans(text).map(|(q, _)| q)
}

pub fn parse_query_with_spans(text: &str) -> Result<(Query, SourceMap), ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        map: SourceMap::default(),
    };
    let q = p.query()?;
    Ok((q, p.map))
}

/// Parses a single ground or variable term (used by the graph loader).
pub(crate) fn term_from_token(tok: &Token) -> Result<Option<Term>, ParseError> {
    let t = match &tok.kind {
        TokenKind::PrefixedName { prefix, local } => Term::Iri(make_iri(prefix, local, tok.span.start)?),
        TokenKind::Var(v) => Term::Variable(Variable::new(v.clone())),
        TokenKind::Str { value, suffix } => Term::Literal(make_literal(value, suffix, tok.span.start)?),
        TokenKind::Number(n) => Term::Literal(Literal::number(n.clone())),
        _ => return Ok(None),
    };
    Ok(Some(t))
}

pub(crate) fn make_iri(prefix: &str, local: &str, offset: usize) -> Result<Iri, ParseError> {
    let pfx = Prefix::from_name(prefix).ok_or_else(|| ParseError::UnknownPrefix {
        offset,
        prefix: prefix.to_string(),
    })?;
    Iri::new(pfx, local).map_err(|_| ParseError::MalformedId {
        offset,
        iri: format!("{prefix}:{local}"),
    })
}

fn make_literal(value: &str, suffix: &StrSuffix, offset: usize) -> Result<Literal, ParseError> {
    Ok(match suffix {
        StrSuffix::None => Literal::string(value),
        StrSuffix::Lang(l) => Literal::lang(value, l.clone()),
        StrSuffix::Datatype(dt) => match dt.as_str() {
            "date" | "xsd:date" | "xsd:dateTime" => {
                if parse_date(value).is_none() {
                    return Err(ParseError::Syntax {
                        offset,
                        expected: vec!["date literal YYYY-MM-DD"],
                        found: format!("\"{value}\""),
                    });
                }
                Literal::date(value)
            }
            "xsd:integer" | "xsd:decimal" | "xsd:double" if value.parse::<f64>().is_ok() => Literal::number(value),
            _ => {
                return Err(ParseError::Unsupported {
                    offset,
                    construct: format!("datatype `{dt}`"),
                })
            }
        },
    })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    map: SourceMap,
}

const UNSUPPORTED_WORDS: [&str; 14] = [
    "OPTIONAL", "UNION", "MINUS", "BIND", "VALUES", "SERVICE", "GRAPH", "PREFIX", "BASE", "GROUP", "HAVING", "OFFSET",
    "CONSTRUCT", "DESCRIBE",
];

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, ahead: usize) -> &Token {
        let i = (self.pos + ahead).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn offset(&self) -> usize {
        self.peek().span.start
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        let tok = self.peek();
        if let TokenKind::Word(w) = &tok.kind {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED_WORDS.contains(&upper.as_str()) {
                return ParseError::Unsupported {
                    offset: tok.span.start,
                    construct: upper,
                };
            }
        }
        if let TokenKind::IriRef(_) = &tok.kind {
            return ParseError::Unsupported {
                offset: tok.span.start,
                construct: "absolute IRI".into(),
            };
        }
        ParseError::Syntax {
            offset: tok.span.start,
            expected,
            found: tok.describe(),
        }
    }

    fn unsupported(&self, construct: &str) -> ParseError {
        ParseError::Unsupported {
            offset: self.offset(),
            construct: construct.to_string(),
        }
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.peek().is_word(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek().is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, kw: &'static str) -> Result<(), ParseError> {
        if self.eat_word(kw) {
            Ok(())
        } else {
            Err(self.error(vec![kw]))
        }
    }

    fn expect_punct(&mut self, p: &'static str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(vec![p]))
        }
    }

    fn variable(&mut self) -> Result<Variable, ParseError> {
        match &self.peek().kind {
            TokenKind::Var(v) => {
                let v = Variable::new(v.clone());
                self.bump();
                Ok(v)
            }
            _ => Err(self.error(vec!["variable"])),
        }
    }

    fn query(&mut self) -> Result<Query, ParseError> {
        self.map.form = self.offset();
        let form = if self.eat_word("ASK") {
            QueryForm::Ask
        } else if self.eat_word("SELECT") {
            self.select_clause()?
        } else {
            return Err(self.error(vec!["SELECT", "ASK"]));
        };
        self.eat_word("WHERE");
        let (patterns, filters) = self.group()?;
        let mut q = Query {
            form,
            patterns,
            filters,
            order_by: None,
            limit: None,
        };
        if self.peek().is_word("ORDER") {
            self.map.order_by = Some(self.offset());
            self.bump();
            self.expect_word("BY")?;
            q.order_by = Some(self.order_condition()?);
        }
        if self.peek().is_word("LIMIT") {
            self.map.limit = Some(self.offset());
            self.bump();
            let tok = self.peek().clone();
            match &tok.kind {
                TokenKind::Number(n) => match n.parse::<u64>() {
                    Ok(v) if v > 0 => {
                        self.bump();
                        q.limit = Some(v);
                    }
                    _ => {
                        return Err(ParseError::Syntax {
                            offset: tok.span.start,
                            expected: vec!["positive integer"],
                            found: tok.describe(),
                        })
                    }
                },
                _ => return Err(self.error(vec!["positive integer"])),
            }
        }
        if !matches!(self.peek().kind, TokenKind::Eof) {
            let mut expected = Vec::new();
            if q.order_by.is_none() && q.limit.is_none() {
                expected.push("ORDER BY");
            }
            if q.limit.is_none() {
                expected.push("LIMIT");
            }
            expected.push("end of input");
            return Err(self.error(expected));
        }
        Ok(q)
    }

    fn select_clause(&mut self) -> Result<QueryForm, ParseError> {
        let mut distinct = self.eat_word("DISTINCT");
        if self.peek().is_punct("*") {
            return Err(self.unsupported("SELECT *"));
        }
        let counted = if self.peek().is_punct("(") && self.peek_at(1).is_word("COUNT") {
            self.bump();
            let v = self.count_call(&mut distinct)?;
            if self.eat_word("AS") {
                self.variable()?;
            }
            self.expect_punct(")")?;
            Some(v)
        } else if self.peek().is_word("COUNT") {
            Some(self.count_call(&mut distinct)?)
        } else {
            None
        };
        let (projection, count) = match counted {
            Some(v) => (vec![v], true),
            None => {
                let mut vars = Vec::new();
                while let TokenKind::Var(_) = self.peek().kind {
                    self.map.projection.push(self.offset());
                    vars.push(self.variable()?);
                }
                if vars.is_empty() {
                    return Err(self.error(vec!["variable", "DISTINCT", "COUNT"]));
                }
                (vars, false)
            }
        };
        Ok(QueryForm::Select {
            projection,
            distinct,
            count,
        })
    }

    fn count_call(&mut self, distinct: &mut bool) -> Result<Variable, ParseError> {
        self.expect_word("COUNT")?;
        self.expect_punct("(")?;
        if self.eat_word("DISTINCT") {
            *distinct = true;
        }
        if self.peek().is_punct("*") {
            return Err(self.unsupported("COUNT(*)"));
        }
        self.map.projection.push(self.offset());
        let v = self.variable()?;
        self.expect_punct(")")?;
        Ok(v)
    }

    fn group(&mut self) -> Result<(Vec<TriplePattern>, Vec<FilterExpr>), ParseError> {
        self.expect_punct("{")?;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        let mut need_sep = false;
        loop {
            if self.peek().is_punct("}") {
                if patterns.is_empty() && filters.is_empty() {
                    return Err(self.error(vec!["triple pattern", "FILTER"]));
                }
                if patterns.is_empty() {
                    return Err(self.error(vec!["triple pattern"]));
                }
                self.bump();
                break;
            }
            if self.peek().is_punct("{") {
                if self.peek_at(1).is_word("SELECT") {
                    return Err(self.unsupported("subquery"));
                }
                return Err(self.unsupported("nested group"));
            }
            if self.eat_punct(".") {
                need_sep = false;
                continue;
            }
            if self.peek().is_word("FILTER") {
                self.map.filters.push(self.offset());
                self.bump();
                filters.push(self.filter()?);
                need_sep = false;
                continue;
            }
            if need_sep {
                return Err(self.error(vec![".", "FILTER", "}"]));
            }
            self.map.patterns.push(self.offset());
            patterns.push(self.triple()?);
            need_sep = true;
        }
        Ok((patterns, filters))
    }

    fn term(&mut self, expected: &'static str) -> Result<Term, ParseError> {
        let tok = self.peek().clone();
        if tok.is_word("a") {
            return Err(self.unsupported("`a` shorthand"));
        }
        match term_from_token(&tok)? {
            Some(t) => {
                self.bump();
                Ok(t)
            }
            None => Err(self.error(vec![expected])),
        }
    }

    fn reject_path(&self) -> Result<(), ParseError> {
        let t = self.peek();
        if ["/", "|", "*", "+", "^"].iter().any(|p| t.is_punct(p)) {
            return Err(self.unsupported("property path"));
        }
        if t.is_punct(";") || t.is_punct(",") {
            return Err(self.unsupported("predicate-object list"));
        }
        Ok(())
    }

    fn triple(&mut self) -> Result<TriplePattern, ParseError> {
        let subject = self.term("subject")?;
        self.reject_path()?;
        let predicate = self.term("predicate")?;
        self.reject_path()?;
        let object = self.term("object")?;
        self.reject_path()?;
        Ok(TriplePattern {
            subject,
            predicate,
            object,
        })
    }

    fn comparator(&mut self) -> Result<Comparator, ParseError> {
        for c in Comparator::ALL {
            if self.eat_punct(c.symbol()) {
                return Ok(c);
            }
        }
        if self.peek().is_punct("!=") {
            return Err(self.unsupported("`!=`"));
        }
        Err(self.error(vec!["=", "<", ">", "<=", ">="]))
    }

    fn filter(&mut self) -> Result<FilterExpr, ParseError> {
        let wrapped = self.eat_punct("(");
        let f = self.filter_expr()?;
        if wrapped {
            if self.peek().is_punct("&&") || self.peek().is_punct("||") {
                return Err(self.unsupported("boolean connective"));
            }
            self.expect_punct(")")?;
        }
        Ok(f)
    }

    fn filter_expr(&mut self) -> Result<FilterExpr, ParseError> {
        let tok = self.peek().clone();
        if let TokenKind::Word(w) = &tok.kind {
            let upper = w.to_ascii_uppercase();
            let binary = match upper.as_str() {
                "CONTAINS" => Some(FilterOp::Contains),
                "STRSTARTS" => Some(FilterOp::StrStarts),
                _ => None,
            };
            if let Some(op) = binary {
                self.bump();
                self.expect_punct("(")?;
                let a = self.filter_arg()?;
                self.expect_punct(",")?;
                let b = self.filter_arg()?;
                self.expect_punct(")")?;
                return Ok(FilterExpr {
                    op,
                    args: vec![a, b],
                    comparator: None,
                });
            }
            if upper == "LANG" || upper == "YEAR" {
                self.bump();
                self.expect_punct("(")?;
                let a = self.filter_arg()?;
                self.expect_punct(")")?;
                if upper == "LANG" {
                    self.expect_punct("=")?;
                    let b = self.filter_arg()?;
                    return Ok(FilterExpr::lang_equals(a, b));
                }
                let cmp = self.comparator()?;
                let b = self.filter_arg()?;
                return Ok(FilterExpr::year(a, cmp, b));
            }
            if self.peek_at(1).is_punct("(") {
                return Err(self.unsupported(&format!("function {upper}")));
            }
        }
        let a = self.filter_arg()?;
        let cmp = self.comparator()?;
        let b = self.filter_arg()?;
        Ok(FilterExpr::compare(a, cmp, b))
    }

    fn filter_arg(&mut self) -> Result<Term, ParseError> {
        if let TokenKind::Word(w) = &self.peek().kind {
            if self.peek_at(1).is_punct("(") {
                let name = w.to_ascii_uppercase();
                return Err(self.unsupported(&format!("function {name}")));
            }
        }
        self.term("filter argument")
    }

    fn order_condition(&mut self) -> Result<OrderBy, ParseError> {
        let direction = if self.eat_word("ASC") {
            Some(Direction::Ascending)
        } else if self.eat_word("DESC") {
            Some(Direction::Descending)
        } else {
            None
        };
        let ob = match direction {
            Some(direction) => {
                self.expect_punct("(")?;
                let variable = self.variable()?;
                self.expect_punct(")")?;
                OrderBy { variable, direction }
            }
            None => match self.peek().kind {
                TokenKind::Var(_) => OrderBy {
                    variable: self.variable()?,
                    direction: Direction::Ascending,
                },
                _ => return Err(self.error(vec!["ASC", "DESC", "variable"])),
            },
        };
        if matches!(self.peek().kind, TokenKind::Var(_)) || self.peek().is_word("ASC") || self.peek().is_word("DESC") {
            return Err(self.unsupported("multiple ORDER BY keys"));
        }
        Ok(ob)
    }
}
