//! Input symbols for the encoder and the three-class output space of the
//! decoder.

use std::collections::BTreeMap;

use kbqa_core::dataset::{QuestionRecord, Segmenter};
use kbqa_core::sparql::lexer::{tokenize, TokenKind};
use kbqa_core::sparql::{parse_query, Iri, ParseError, Query, Variable};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const UNK: &str = "[UNK]";

/// End-of-query marker in the keyword class.
pub const EOQ: &str = "<EOQ>";
pub const KW_UNK: &str = "<UNK>";

/// Number of variable slots `?v1 … ?vN` in the keyword class.
pub const MAX_VARIABLES: usize = 8;

/// Structural keyword tokens present in every output vocabulary.
pub fn base_keywords() -> Vec<String> {
    let mut out: Vec<String> = [
        EOQ, KW_UNK, "SELECT", "ASK", "WHERE", "DISTINCT", "COUNT", "AS", "FILTER", "CONTAINS", "STRSTARTS", "LANG",
        "YEAR", "ORDER", "BY", "ASC", "DESC", "LIMIT", "{", "}", ".", "(", ")", ",", "=", "<", ">", "<=", ">=",
        "?count",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    out.extend((1..=MAX_VARIABLES).map(|i| format!("?v{i}")));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("query uses {0} variables, more than the {MAX_VARIABLES} slots")]
    TooManyVariables(usize),
    #[error("IRI {0} is not among the record's candidates")]
    MissingCandidate(String),
    #[error("keyword token `{0}` is not in the output vocabulary")]
    UnknownToken(String),
    #[error("could not tokenise query: {0}")]
    Lex(String),
}

/// Encoder symbols: question segments, candidate IRIs and the specials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputVocab {
    symbols: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl InputVocab {
    pub fn new(symbols: impl IntoIterator<Item = String>) -> Self {
        let mut v = InputVocab {
            symbols: vec![CLS.into(), SEP.into(), UNK.into()],
            index: BTreeMap::new(),
        };
        for s in symbols {
            if !v.symbols.contains(&s) {
                v.symbols.push(s);
            }
        }
        v.reindex();
        v
    }

    /// Vocabulary over the question tokens and candidates of `records`.
    pub fn from_records(records: &[QuestionRecord], segmenter: &dyn Segmenter) -> Self {
        let mut syms: Vec<String> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for r in records {
            for t in segmenter.tokens(&r.question_zh) {
                if seen.insert(t.to_string()) {
                    syms.push(t.to_string());
                }
            }
            for iri in r.candidates() {
                if seen.insert(iri.to_string()) {
                    syms.push(iri.to_string());
                }
            }
        }
        InputVocab::new(syms)
    }

    pub(crate) fn reindex(&mut self) {
        self.index = self.symbols.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn id(&self, symbol: &str) -> usize {
        self.index.get(symbol).copied().unwrap_or(2)
    }

    pub fn symbol(&self, id: usize) -> &str {
        &self.symbols[id]
    }
}

/// One decoder output: a keyword-class id or a candidate slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutputToken {
    Keyword(usize),
    Entity(usize),
    Relation(usize),
}

/// Keyword-class vocabulary: structural tokens plus literal surfaces seen
/// in training queries. Entity and relation slots are per record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputVocab {
    keywords: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl OutputVocab {
    pub fn new(keywords: impl IntoIterator<Item = String>) -> Self {
        let mut v = OutputVocab {
            keywords: Vec::new(),
            index: BTreeMap::new(),
        };
        for k in keywords {
            if !v.keywords.contains(&k) {
                v.keywords.push(k);
            }
        }
        v.reindex();
        v
    }

    /// Base keywords plus every literal/number surface in the gold queries.
    pub fn from_records(records: &[QuestionRecord]) -> Self {
        let mut kws = base_keywords();
        for r in records {
            if let Ok(surfaces) = surface_tokens(&canonical_variables(&r.gold)) {
                for (s, kind) in surfaces {
                    if matches!(kind, SurfaceKind::Keyword) {
                        kws.push(s);
                    }
                }
            }
        }
        OutputVocab::new(kws)
    }

    pub(crate) fn reindex(&mut self) {
        self.index = self.keywords.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn keyword_id(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn keyword(&self, id: usize) -> &str {
        &self.keywords[id]
    }

    pub fn eoq(&self) -> usize {
        self.keyword_id(EOQ).expect("vocabulary has an end marker")
    }

    /// Gold output sequence for a record, ending with the end marker.
    pub fn encode(&self, q: &Query, entities: &[Iri], relations: &[Iri]) -> Result<Vec<OutputToken>, VocabError> {
        let mut out = Vec::new();
        for (surface, kind) in surface_tokens(&canonical_variables(q))? {
            let tok = match kind {
                SurfaceKind::Iri(iri) if iri.is_entity() => OutputToken::Entity(
                    entities.iter().position(|e| *e == iri).ok_or_else(|| VocabError::MissingCandidate(surface.clone()))?,
                ),
                SurfaceKind::Iri(iri) => OutputToken::Relation(
                    relations
                        .iter()
                        .position(|e| *e == iri)
                        .ok_or_else(|| VocabError::MissingCandidate(surface.clone()))?,
                ),
                SurfaceKind::Keyword => {
                    OutputToken::Keyword(self.keyword_id(&surface).ok_or(VocabError::UnknownToken(surface))?)
                }
            };
            out.push(tok);
        }
        out.push(OutputToken::Keyword(self.eoq()));
        Ok(out)
    }

    /// Query text for a token sequence (without the end marker).
    pub fn render(&self, tokens: &[OutputToken], entities: &[Iri], relations: &[Iri]) -> String {
        let words: Vec<String> = tokens
            .iter()
            .map(|t| match *t {
                OutputToken::Keyword(k) => self.keyword(k).to_string(),
                OutputToken::Entity(i) => entities[i].to_string(),
                OutputToken::Relation(i) => relations[i].to_string(),
            })
            .collect();
        words.join(" ")
    }
}

/// Renames variables to `v1, v2, …` in order of first appearance in the
/// printed query (projection first, then patterns, filters, ORDER BY).
pub fn canonical_variables(q: &Query) -> Query {
    let mut order: Vec<Variable> = Vec::new();
    let mut note = |v: &Variable| {
        if !order.contains(v) {
            order.push(v.clone());
        }
    };
    q.projection().iter().for_each(&mut note);
    for p in &q.patterns {
        p.terms().into_iter().filter_map(|t| t.as_variable()).for_each(&mut note);
    }
    for f in &q.filters {
        f.variables().for_each(&mut note);
    }
    if let Some(o) = &q.order_by {
        note(&o.variable);
    }
    q.map_variables(|v| {
        let i = order.iter().position(|x| x == v).expect("variable collected");
        Variable::new(format!("v{}", i + 1))
    })
}

enum SurfaceKind {
    Keyword,
    Iri(Iri),
}

fn surface_tokens(q: &Query) -> Result<Vec<(String, SurfaceKind)>, VocabError> {
    let n_vars = {
        let mut vs: Vec<&Variable> = q.pattern_variables();
        vs.sort();
        vs.dedup();
        vs.len()
    };
    if n_vars > MAX_VARIABLES {
        return Err(VocabError::TooManyVariables(n_vars));
    }
    let text = q.to_string();
    let tokens = tokenize(&text).map_err(|e: ParseError| VocabError::Lex(e.to_string()))?;
    let mut out = Vec::new();
    for t in tokens {
        let surface = text[t.span.clone()].to_string();
        let kind = match &t.kind {
            TokenKind::Eof => break,
            TokenKind::PrefixedName { .. } => match surface.parse::<Iri>() {
                Ok(iri) => SurfaceKind::Iri(iri),
                Err(_) => SurfaceKind::Keyword,
            },
            _ => SurfaceKind::Keyword,
        };
        out.push((surface, kind));
    }
    Ok(out)
}

/// Parses decoder output text back into a query.
pub fn parse_output(text: &str) -> Result<Query, ParseError> {
    parse_query(text)
}
