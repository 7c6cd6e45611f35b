use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::sparql::lexer::{tokenize, TokenKind};
use crate::sparql::{make_iri, term_from_token, Iri, Literal, Term};

/// A ground term stored in the graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Iri(Iri),
    Literal(Literal),
    /// Statement node, written `wds:<id>` in graph files.
    Statement(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Iri(i) => i.fmt(f),
            Value::Literal(l) => l.fmt(f),
            Value::Statement(s) => write!(f, "wds:{s}"),
        }
    }
}

impl Value {
    /// The ground value a query term denotes, if it is not a variable.
    pub fn from_term(t: &Term) -> Option<Value> {
        match t {
            Term::Iri(i) => Some(Value::Iri(i.clone())),
            Term::Literal(l) => Some(Value::Literal(l.clone())),
            Term::Variable(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Value::Literal(l) => Some(l),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Value,
    pub predicate: Iri,
    pub object: Value,
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    LineParse { line: usize, message: String },
}

/// A `ps:`/`pq:` triple whose subject is never the object of a `p:` triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualifierViolation {
    pub triple: Triple,
}

impl fmt::Display for QualifierViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "qualifier discipline: `{}` has no statement link via a p: triple",
            self.triple
        )
    }
}

/// In-memory triple set with subject/predicate/object indexes.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    triples: Vec<Triple>,
    members: HashSet<Triple>,
    by_subject: HashMap<Value, Vec<usize>>,
    by_predicate: HashMap<Iri, Vec<usize>>,
    by_object: HashMap<Value, Vec<usize>>,
    labels: BTreeMap<Iri, BTreeMap<String, String>>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut kg = Self::new();
        for t in triples {
            kg.insert(t);
        }
        kg
    }

    /// Adds a triple; returns false if it was already present.
    pub fn insert(&mut self, t: Triple) -> bool {
        if self.members.contains(&t) {
            return false;
        }
        let idx = self.triples.len();
        self.by_subject.entry(t.subject.clone()).or_default().push(idx);
        self.by_predicate.entry(t.predicate.clone()).or_default().push(idx);
        self.by_object.entry(t.object.clone()).or_default().push(idx);
        self.members.insert(t.clone());
        self.triples.push(t);
        true
    }

    pub fn set_label(&mut self, iri: Iri, lang: impl Into<String>, label: impl Into<String>) {
        self.labels.entry(iri).or_default().insert(lang.into(), label.into());
    }

    pub fn label(&self, iri: &Iri, lang: &str) -> Option<&str> {
        self.labels.get(iri)?.get(lang).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.members.contains(t)
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Every distinct value appearing in subject or object position.
    pub fn nodes(&self) -> Vec<Value> {
        let mut out: Vec<Value> = self.by_subject.keys().chain(self.by_object.keys()).cloned().collect();
        out.sort();
        out.dedup();
        out
    }

    pub(crate) fn with_subject(&self, v: &Value) -> &[usize] {
        self.by_subject.get(v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn with_predicate(&self, p: &Iri) -> &[usize] {
        self.by_predicate.get(p).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn with_object(&self, v: &Value) -> &[usize] {
        self.by_object.get(v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn triple(&self, idx: usize) -> &Triple {
        &self.triples[idx]
    }

    /// Statement-node discipline: subjects of `ps:`/`pq:` triples must be
    /// reached from an item through a `p:` triple.
    pub fn qualifier_violations(&self) -> Vec<QualifierViolation> {
        use crate::sparql::Prefix;
        let linked: HashSet<&Value> = self
            .triples
            .iter()
            .filter(|t| t.predicate.prefix() == Prefix::P)
            .map(|t| &t.object)
            .collect();
        self.triples
            .iter()
            .filter(|t| matches!(t.predicate.prefix(), Prefix::Ps | Prefix::Pq))
            .filter(|t| !linked.contains(&t.subject))
            .map(|t| QualifierViolation { triple: t.clone() })
            .collect()
    }
}

/// Parses the line-oriented graph format:
///
/// ```text
/// # comment
/// wd:Q133063 p:P39 wds:Q133063-1 .
/// wds:Q133063-1 pq:P580 "1073-04-22"^^date .
/// wd:Q234691 rdfs:label "Stevie Nicks"@en .
/// ```
///
/// `rdfs:label` lines populate the label table instead of the triple set.
pub fn load_graph(src: &str) -> Result<KnowledgeGraph, GraphError> {
    let mut kg = KnowledgeGraph::new();
    for (n, line) in src.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| GraphError::LineParse { line: line_no, message };
        let tokens = tokenize(line).map_err(|e| err(e.to_string()))?;
        if tokens.len() == 1 {
            continue;
        }
        if tokens.len() != 5 || !tokens[3].is_punct(".") {
            return Err(err("expected `subject predicate object .`".into()));
        }
        let subject = value_of(&tokens[0].kind, &tokens[0]).map_err(err)?;
        if let TokenKind::PrefixedName { prefix, local } = &tokens[1].kind {
            if prefix == "rdfs" && local == "label" {
                let iri = match subject {
                    Value::Iri(i) => i,
                    _ => return Err(err("labels attach to IRIs only".into())),
                };
                let obj = value_of(&tokens[2].kind, &tokens[2]).map_err(err)?;
                let lit = match obj {
                    Value::Literal(l) if l.is_stringy() => l,
                    _ => return Err(err("label must be a string literal".into())),
                };
                let lang = match lit.tag {
                    crate::sparql::LiteralTag::Lang(l) => l,
                    _ => String::new(),
                };
                kg.set_label(iri, lang, lit.lexical);
                continue;
            }
        }
        let predicate = match &tokens[1].kind {
            TokenKind::PrefixedName { prefix, local } => {
                let iri = make_iri(prefix, local, tokens[1].span.start).map_err(|e| err(e.to_string()))?;
                if !iri.is_relation() {
                    return Err(err(format!("predicate `{iri}` is not a property")));
                }
                iri
            }
            _ => return Err(err(format!("expected predicate, found {}", tokens[1].describe()))),
        };
        let object = value_of(&tokens[2].kind, &tokens[2]).map_err(err)?;
        if matches!(subject, Value::Literal(_)) {
            return Err(err("literal in subject position".into()));
        }
        kg.insert(Triple {
            subject,
            predicate,
            object,
        });
    }
    Ok(kg)
}

fn value_of(kind: &TokenKind, tok: &crate::sparql::lexer::Token) -> Result<Value, String> {
    if let TokenKind::PrefixedName { prefix, local } = kind {
        if prefix == "wds" {
            if local.is_empty() {
                return Err("empty statement id".into());
            }
            return Ok(Value::Statement(local.clone()));
        }
    }
    match term_from_token(tok).map_err(|e| e.to_string())? {
        Some(Term::Variable(v)) => Err(format!("variable {v} in graph data")),
        Some(t) => Ok(Value::from_term(&t).expect("ground term")),
        None => Err(format!("expected a term, found {}", tok.describe())),
    }
}
