use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::graph::{KnowledgeGraph, Value};
use crate::sparql::{Comparator, Direction, FilterExpr, FilterOp, LiteralTag, Query, QueryForm, Term, TriplePattern, Variable};

/// A total assignment of ground values to the variables of a pattern group.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding(pub BTreeMap<Variable, Value>);

impl Binding {
    pub fn get(&self, v: &Variable) -> Option<&Value> {
        self.0.get(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnswerSet {
    Boolean(bool),
    Count(u64),
    /// Projected tuples; ordered when the query has ORDER BY.
    Rows(Vec<Vec<Value>>),
}

impl fmt::Display for AnswerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerSet::Boolean(b) => write!(f, "{b}"),
            AnswerSet::Count(n) => write!(f, "{n}"),
            AnswerSet::Rows(rows) => {
                for (i, row) in rows.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    let cells: Vec<String> = row.iter().map(Value::to_string).collect();
                    f.write_str(&cells.join("\t"))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("filter variable {0} is unbound")]
    UnboundFilterVariable(Variable),
    #[error("type error in filter: {0}")]
    TypeErrorInFilter(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("ORDER BY variable {0} is not bound by the patterns")]
    UnboundOrderVariable(Variable),
    #[error("filter variable {0} is not bound by the patterns")]
    UnboundFilterVariable(Variable),
    #[error("query has no triple patterns")]
    EmptyPatterns,
}

/// A binding dropped because a filter could not be evaluated on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterDiagnostic {
    pub filter: usize,
    pub message: String,
}

/// All bindings that map every pattern onto a graph triple.
///
/// Backtracking join; at each depth the pattern with the fewest candidate
/// triples under the current partial binding is solved next.
pub fn match_pattern(kg: &KnowledgeGraph, patterns: &[TriplePattern]) -> BTreeSet<Binding> {
    let mut out = BTreeSet::new();
    if patterns.is_empty() {
        return out;
    }
    let mut remaining: Vec<&TriplePattern> = patterns.iter().collect();
    let mut current = BTreeMap::new();
    solve(kg, &mut remaining, &mut current, &mut out);
    out
}

fn resolve(t: &Term, b: &BTreeMap<Variable, Value>) -> Option<Value> {
    match t {
        Term::Variable(v) => b.get(v).cloned(),
        other => Value::from_term(other),
    }
}

fn candidates<'a>(kg: &'a KnowledgeGraph, p: &TriplePattern, b: &BTreeMap<Variable, Value>) -> Candidates<'a> {
    let mut best: Option<&'a [usize]> = None;
    let mut consider = |slice: &'a [usize]| {
        if best.is_none_or(|cur| slice.len() < cur.len()) {
            best = Some(slice);
        }
    };
    if let Some(s) = resolve(&p.subject, b) {
        consider(kg.with_subject(&s));
    }
    match resolve(&p.predicate, b) {
        Some(Value::Iri(iri)) => consider(kg.with_predicate(&iri)),
        Some(_) => consider(&[]),
        None => {}
    }
    if let Some(o) = resolve(&p.object, b) {
        consider(kg.with_object(&o));
    }
    match best {
        Some(s) => Candidates::Indexed(s),
        None => Candidates::All(kg.len()),
    }
}

enum Candidates<'a> {
    Indexed(&'a [usize]),
    All(usize),
}

impl Candidates<'_> {
    fn len(&self) -> usize {
        match self {
            Candidates::Indexed(s) => s.len(),
            Candidates::All(n) => *n,
        }
    }

    fn iter(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        match self {
            Candidates::Indexed(s) => Box::new(s.iter().copied()),
            Candidates::All(n) => Box::new(0..*n),
        }
    }
}

fn unify(t: &Term, v: &Value, b: &mut BTreeMap<Variable, Value>, newly: &mut Vec<Variable>) -> bool {
    match t {
        Term::Variable(var) => match b.get(var) {
            Some(existing) => existing == v,
            None => {
                b.insert(var.clone(), v.clone());
                newly.push(var.clone());
                true
            }
        },
        other => Value::from_term(other).as_ref() == Some(v),
    }
}

fn solve(
    kg: &KnowledgeGraph,
    remaining: &mut Vec<&TriplePattern>,
    current: &mut BTreeMap<Variable, Value>,
    out: &mut BTreeSet<Binding>,
) {
    if remaining.is_empty() {
        out.insert(Binding(current.clone()));
        return;
    }
    let (pick, cands) = remaining
        .iter()
        .enumerate()
        .map(|(i, p)| (i, candidates(kg, p, current)))
        .min_by_key(|(_, c)| c.len())
        .expect("nonempty");
    let pattern = remaining.swap_remove(pick);
    for idx in cands.iter() {
        let t = kg.triple(idx);
        let mut newly = Vec::new();
        let pred = Value::Iri(t.predicate.clone());
        let ok = unify(&pattern.subject, &t.subject, current, &mut newly)
            && unify(&pattern.predicate, &pred, current, &mut newly)
            && unify(&pattern.object, &t.object, current, &mut newly);
        if ok {
            solve(kg, remaining, current, out);
        }
        for v in newly {
            current.remove(&v);
        }
    }
    remaining.push(pattern);
    let last = remaining.len() - 1;
    remaining.swap(pick, last);
}

fn filter_value(t: &Term, b: &Binding) -> Result<Value, FilterError> {
    match t {
        Term::Variable(v) => b.get(v).cloned().ok_or_else(|| FilterError::UnboundFilterVariable(v.clone())),
        other => Ok(Value::from_term(other).expect("ground")),
    }
}

fn type_err(msg: impl Into<String>) -> FilterError {
    FilterError::TypeErrorInFilter(msg.into())
}

/// Evaluates one filter under a binding.
pub fn eval_filter(f: &FilterExpr, b: &Binding) -> Result<bool, FilterError> {
    if f.args.len() != 2 {
        return Err(type_err(format!("{} expects 2 arguments", f.op.name())));
    }
    let lhs = filter_value(&f.args[0], b)?;
    let rhs = filter_value(&f.args[1], b)?;
    match f.op {
        FilterOp::Contains | FilterOp::StrStarts => {
            let (Some(a), Some(n)) = (lhs.as_literal(), rhs.as_literal()) else {
                return Err(type_err(format!("{} on non-literal", f.op.name())));
            };
            if !a.is_stringy() || !n.is_stringy() {
                return Err(type_err(format!("{} on non-string literal", f.op.name())));
            }
            Ok(if f.op == FilterOp::Contains {
                a.lexical.contains(n.lexical.as_str())
            } else {
                a.lexical.starts_with(n.lexical.as_str())
            })
        }
        FilterOp::LangEquals => {
            let Some(a) = lhs.as_literal() else {
                return Err(type_err("LANG of a non-literal"));
            };
            let Some(tag) = rhs.as_literal().filter(|l| l.is_stringy()) else {
                return Err(type_err("LANG compared with a non-string"));
            };
            let lang = match &a.tag {
                LiteralTag::Lang(l) => l.as_str(),
                _ => "",
            };
            Ok(lang.eq_ignore_ascii_case(&tag.lexical))
        }
        FilterOp::YearCompare => {
            let cmp = f.comparator.ok_or_else(|| type_err("YEAR without comparator"))?;
            let Some((year, _, _)) = lhs.as_literal().and_then(|l| l.as_date()) else {
                return Err(type_err(format!("YEAR of non-date `{lhs}`")));
            };
            let Some(target) = rhs.as_literal().and_then(|l| l.as_number()) else {
                return Err(type_err(format!("YEAR compared with non-number `{rhs}`")));
            };
            Ok(cmp.holds((year as f64).total_cmp(&target)))
        }
        FilterOp::NumericCompare => {
            let cmp = f.comparator.ok_or_else(|| type_err("comparison without comparator"))?;
            compare_values(&lhs, &rhs, cmp)
        }
    }
}

fn compare_values(a: &Value, b: &Value, cmp: Comparator) -> Result<bool, FilterError> {
    let ord = match (a, b) {
        (Value::Literal(x), Value::Literal(y)) => {
            if let (Some(p), Some(q)) = (x.as_number(), y.as_number()) {
                p.total_cmp(&q)
            } else if let (Some(p), Some(q)) = (x.as_date(), y.as_date()) {
                p.cmp(&q)
            } else if x.is_stringy() && y.is_stringy() {
                x.lexical.cmp(&y.lexical)
            } else {
                return Err(type_err(format!("cannot compare `{a}` with `{b}`")));
            }
        }
        _ if cmp == Comparator::Eq && !matches!(a, Value::Literal(_)) && !matches!(b, Value::Literal(_)) => {
            return Ok(a == b);
        }
        _ => return Err(type_err(format!("cannot order `{a}` and `{b}`"))),
    };
    Ok(cmp.holds(ord))
}

/// Ordering used by ORDER BY: numbers, then dates, then strings, then
/// IRIs and statement nodes by rendering.
pub fn order_cmp(a: &Value, b: &Value) -> Ordering {
    fn rank(v: &Value) -> u8 {
        match v {
            Value::Literal(l) if l.as_number().is_some() => 0,
            Value::Literal(l) if l.as_date().is_some() => 1,
            Value::Literal(_) => 2,
            Value::Iri(_) => 3,
            Value::Statement(_) => 4,
        }
    }
    rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
        (Value::Literal(x), Value::Literal(y)) => match (x.as_number(), y.as_number()) {
            (Some(p), Some(q)) => p.total_cmp(&q),
            _ => match (x.as_date(), y.as_date()) {
                (Some(p), Some(q)) => p.cmp(&q),
                _ => x.lexical.cmp(&y.lexical),
            },
        },
        _ => a.to_string().cmp(&b.to_string()),
    })
}

/// Tie-breaking key for rows: the canonical rendering of each cell.
pub fn row_key(row: &[Value]) -> Vec<String> {
    row.iter().map(Value::to_string).collect()
}

pub fn execute(kg: &KnowledgeGraph, q: &Query) -> Result<AnswerSet, ExecError> {
    execute_with_diagnostics(kg, q).map(|(a, _)| a)
}

/// Runs `q`, also returning the bindings that filters dropped on type errors.
pub fn execute_with_diagnostics(kg: &KnowledgeGraph, q: &Query) -> Result<(AnswerSet, Vec<FilterDiagnostic>), ExecError> {
    if q.patterns.is_empty() {
        return Err(ExecError::EmptyPatterns);
    }
    let bound: BTreeSet<&Variable> = q.pattern_variables().into_iter().collect();
    for f in &q.filters {
        if let Some(v) = f.variables().find(|v| !bound.contains(v)) {
            return Err(ExecError::UnboundFilterVariable(v.clone()));
        }
    }
    if let Some(o) = &q.order_by {
        if !bound.contains(&o.variable) {
            return Err(ExecError::UnboundOrderVariable(o.variable.clone()));
        }
    }

    let mut diagnostics = Vec::new();
    let mut survivors = Vec::new();
    'bindings: for b in match_pattern(kg, &q.patterns) {
        for (i, f) in q.filters.iter().enumerate() {
            match eval_filter(f, &b) {
                Ok(true) => {}
                Ok(false) => continue 'bindings,
                Err(e) => {
                    diagnostics.push(FilterDiagnostic {
                        filter: i,
                        message: e.to_string(),
                    });
                    continue 'bindings;
                }
            }
        }
        survivors.push(b);
    }

    let answers = match &q.form {
        QueryForm::Ask => AnswerSet::Boolean(!survivors.is_empty()),
        QueryForm::Select { projection, count: true, .. } => {
            let var = &projection[0];
            let distinct: BTreeSet<&Value> = survivors.iter().filter_map(|b| b.get(var)).collect();
            AnswerSet::Count(distinct.len() as u64)
        }
        QueryForm::Select {
            projection, distinct, ..
        } => {
            let mut rows: Vec<(Option<Value>, Vec<Value>)> = survivors
                .iter()
                .map(|b| {
                    let key = q.order_by.as_ref().and_then(|o| b.get(&o.variable).cloned());
                    let row = projection.iter().map(|v| b.get(v).cloned().expect("projected variable bound")).collect();
                    (key, row)
                })
                .collect();
            let direction = q.order_by.as_ref().map(|o| o.direction);
            rows.sort_by(|(ka, ra), (kb, rb)| {
                let primary = match (ka, kb, direction) {
                    (Some(a), Some(b), Some(Direction::Ascending)) => order_cmp(a, b),
                    (Some(a), Some(b), Some(Direction::Descending)) => order_cmp(b, a),
                    _ => Ordering::Equal,
                };
                primary.then_with(|| row_key(ra).cmp(&row_key(rb)))
            });
            let mut out: Vec<Vec<Value>> = Vec::with_capacity(rows.len());
            if *distinct {
                let mut seen = BTreeSet::new();
                for (_, row) in rows {
                    if seen.insert(row.clone()) {
                        out.push(row);
                    }
                }
            } else {
                out.extend(rows.into_iter().map(|(_, r)| r));
            }
            if let Some(n) = q.limit {
                out.truncate(n as usize);
            }
            AnswerSet::Rows(out)
        }
    };
    Ok((answers, diagnostics))
}
