//! The Wikidata query subset: syntax tree, parser, printer and validator.
//!
//! Printing goes through [`std::fmt::Display`] on [`Query`]; the output is a
//! canonical single line that parses back to a structurally equal query.

mod ast;
pub mod lexer;
mod parser;
mod validate;

pub use ast::*;
pub use parser::{parse_query, parse_query_with_spans, SourceMap};
pub(crate) use parser::{make_iri, term_from_token};
pub use validate::{validate, Diagnostic, DiagnosticCode, NodeRef};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("expected one of {}, found {found}", expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown prefix `{prefix}`")]
    UnknownPrefix { offset: usize, prefix: String },
    #[error("malformed id `{iri}`")]
    MalformedId { offset: usize, iri: String },
    #[error("unsupported construct: {construct}")]
    Unsupported { offset: usize, construct: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownPrefix { offset, .. }
            | ParseError::MalformedId { offset, .. }
            | ParseError::Unsupported { offset, .. } => *offset,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "SyntaxError",
            ParseError::UnknownPrefix { .. } => "UnknownPrefix",
            ParseError::MalformedId { .. } => "MalformedId",
            ParseError::Unsupported { .. } => "Unsupported",
        }
    }

    /// `line:col: code: message` against the source the error came from.
    pub fn render(&self, src: &str) -> String {
        let (line, col) = line_col(src, self.offset());
        format!("{line}:{col}: {}: {self} (byte {})", self.code(), self.offset())
    }
}

/// 1-based line and column (in characters) of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let before = &src[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
    let col = src[line_start..offset].chars().count() + 1;
    (line, col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_positions() {
        let src = "SELECT ?x\nWHERE { }";
        let err = parse_query(src).unwrap_err();
        assert_eq!(err.render(src), "2:9: SyntaxError: expected one of triple pattern, FILTER, found `}` (byte 18)");
    }

    #[test]
    fn parse_is_deterministic() {
        let src = "SELECT DISTINCT ?x WHERE { ?x wdt:P31 wd:Q5 FILTER(STRSTARTS(?x, \"G\")) } LIMIT 2";
        assert_eq!(parse_query(src).unwrap(), parse_query(src).unwrap());
    }
}
