use std::collections::BTreeSet;
use std::fmt;

use super::ast::*;
use super::{line_col, SourceMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticCode {
    UnboundProjection,
    DuplicateProjection,
    EmptyProjection,
    ModifierOnAsk,
    CountArity,
    EmptyPatterns,
    BadPredicate,
    FilterArity,
    EmptyVariable,
    ZeroLimit,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::UnboundProjection => "unbound projection",
            DiagnosticCode::DuplicateProjection => "duplicate projection",
            DiagnosticCode::EmptyProjection => "empty projection",
            DiagnosticCode::ModifierOnAsk => "modifier on ASK",
            DiagnosticCode::CountArity => "count arity",
            DiagnosticCode::EmptyPatterns => "empty pattern group",
            DiagnosticCode::BadPredicate => "bad predicate",
            DiagnosticCode::FilterArity => "filter arity",
            DiagnosticCode::EmptyVariable => "empty variable",
            DiagnosticCode::ZeroLimit => "zero limit",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The syntax-tree node a diagnostic points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Form,
    Projection(usize),
    Pattern(usize),
    Filter(usize),
    OrderBy,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub node: NodeRef,
    pub message: String,
}

impl Diagnostic {
    fn new(code: DiagnosticCode, node: NodeRef, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            node,
            message: message.into(),
        }
    }

    /// `line:col: code: message`, positioned through the parser's source map.
    /// Falls back to `1:1` for nodes without a recorded position.
    pub fn render(&self, src: &str, map: &SourceMap) -> String {
        let offset = match self.node {
            NodeRef::Form => Some(map.form),
            NodeRef::Projection(i) => map.projection.get(i).copied(),
            NodeRef::Pattern(i) => map.patterns.get(i).copied(),
            NodeRef::Filter(i) => map.filters.get(i).copied(),
            NodeRef::OrderBy => map.order_by,
            NodeRef::Limit => map.limit,
        };
        let (line, col) = offset.map(|o| line_col(src, o)).unwrap_or((1, 1));
        format!("{line}:{col}: {}: {}", self.code, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({:?})", self.code, self.message, self.node)
    }
}

/// Checks every structural invariant of `q`. An empty result means the
/// query is well-formed.
pub fn validate(q: &Query) -> Vec<Diagnostic> {
    use DiagnosticCode::*;
    let mut out = Vec::new();

    if q.patterns.is_empty() {
        out.push(Diagnostic::new(EmptyPatterns, NodeRef::Form, "query has no triple patterns"));
    }

    for (i, p) in q.patterns.iter().enumerate() {
        match &p.predicate {
            Term::Variable(_) => {}
            Term::Iri(iri) if iri.is_relation() => {}
            other => out.push(Diagnostic::new(
                BadPredicate,
                NodeRef::Pattern(i),
                format!("predicate `{other}` must be a wdt/p/ps/pq property or a variable"),
            )),
        }
        for t in p.terms() {
            if let Term::Variable(v) = t {
                if v.name().is_empty() {
                    out.push(Diagnostic::new(EmptyVariable, NodeRef::Pattern(i), "variable with empty name"));
                }
            }
        }
    }

    let mut bound: BTreeSet<&Variable> = BTreeSet::new();
    for p in &q.patterns {
        bound.extend(p.terms().into_iter().filter_map(Term::as_variable));
    }
    for (i, f) in q.filters.iter().enumerate() {
        bound.extend(f.variables());
        let arity_ok = f.args.len() == 2;
        let cmp_ok = match f.op {
            FilterOp::Contains | FilterOp::StrStarts => f.comparator.is_none(),
            FilterOp::LangEquals => matches!(f.comparator, None | Some(Comparator::Eq)),
            FilterOp::YearCompare | FilterOp::NumericCompare => f.comparator.is_some(),
        };
        if !arity_ok || !cmp_ok {
            out.push(Diagnostic::new(
                FilterArity,
                NodeRef::Filter(i),
                format!(
                    "{} takes 2 arguments{}, got {}{}",
                    f.op.name(),
                    if f.op.needs_comparator() { " and a comparator" } else { "" },
                    f.args.len(),
                    if cmp_ok { "" } else { " with a mismatched comparator" }
                ),
            ));
        }
        if f.variables().any(|v| v.name().is_empty()) {
            out.push(Diagnostic::new(EmptyVariable, NodeRef::Filter(i), "variable with empty name"));
        }
    }

    match &q.form {
        QueryForm::Ask => {
            if q.order_by.is_some() {
                out.push(Diagnostic::new(ModifierOnAsk, NodeRef::OrderBy, "ORDER BY on an ASK query"));
            }
            if q.limit.is_some() {
                out.push(Diagnostic::new(ModifierOnAsk, NodeRef::Limit, "LIMIT on an ASK query"));
            }
        }
        QueryForm::Select { projection, count, .. } => {
            if projection.is_empty() {
                out.push(Diagnostic::new(EmptyProjection, NodeRef::Form, "SELECT without variables"));
            }
            if *count && projection.len() != 1 {
                out.push(Diagnostic::new(
                    CountArity,
                    NodeRef::Form,
                    format!("COUNT needs exactly one variable, got {}", projection.len()),
                ));
            }
            let mut seen = BTreeSet::new();
            for (i, v) in projection.iter().enumerate() {
                if !seen.insert(v) {
                    out.push(Diagnostic::new(
                        DuplicateProjection,
                        NodeRef::Projection(i),
                        format!("{v} projected twice"),
                    ));
                }
                if v.name().is_empty() {
                    out.push(Diagnostic::new(EmptyVariable, NodeRef::Projection(i), "variable with empty name"));
                } else if !bound.contains(v) {
                    out.push(Diagnostic::new(
                        UnboundProjection,
                        NodeRef::Projection(i),
                        format!("{v} does not occur in the patterns or filters"),
                    ));
                }
            }
        }
    }

    if q.limit == Some(0) {
        out.push(Diagnostic::new(ZeroLimit, NodeRef::Limit, "LIMIT must be positive"));
    }
    out
}
