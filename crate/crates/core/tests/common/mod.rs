//! Random queries, random graphs and a brute-force evaluator shared by the
//! property tests.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use kbqa_core::kg::{AnswerSet, Binding, KnowledgeGraph, Triple, Value};
use kbqa_core::sparql::*;
use rand::seq::SliceRandom;
use rand::Rng;

pub const VAR_NAMES: [&str; 4] = ["a", "b", "value1", "obj"];

fn iri(s: &str) -> Iri {
    s.parse().unwrap()
}

pub fn entities() -> Vec<Iri> {
    (1..=8).map(|i| iri(&format!("wd:Q{i}"))).collect()
}

pub fn relations() -> Vec<Iri> {
    ["wdt:P1", "wdt:P2", "wdt:P3", "p:P4", "ps:P4", "pq:P5"].iter().map(|s| iri(s)).collect()
}

pub fn literals() -> Vec<Literal> {
    vec![
        Literal::lang("alpha", "en"),
        Literal::lang("alphabet", "zh"),
        Literal::string("beta"),
        Literal::string("尼克斯"),
        Literal::number("1"),
        Literal::number("3"),
        Literal::number("-2.5"),
        Literal::date("1073-04-22"),
        Literal::date("1950-01-01"),
    ]
}

pub fn statements() -> Vec<String> {
    vec!["Q1-1".into(), "Q2-1".into()]
}

/// A random graph over a small fixed vocabulary (at most 200 triples,
/// 14 distinct IRIs).
pub fn random_graph<R: Rng>(rng: &mut R, max_triples: usize) -> KnowledgeGraph {
    let ents = entities();
    let rels = relations();
    let lits = literals();
    let stmts = statements();
    let n = rng.gen_range(0..=max_triples);
    let mut kg = KnowledgeGraph::new();
    for _ in 0..n {
        let predicate = rels.choose(rng).unwrap().clone();
        let subject = match predicate.prefix() {
            Prefix::Ps | Prefix::Pq => Value::Statement(stmts.choose(rng).unwrap().clone()),
            _ => Value::Iri(ents.choose(rng).unwrap().clone()),
        };
        let object = match predicate.prefix() {
            Prefix::P => Value::Statement(stmts.choose(rng).unwrap().clone()),
            _ if rng.gen_bool(0.5) => Value::Iri(ents.choose(rng).unwrap().clone()),
            _ => Value::Literal(lits.choose(rng).unwrap().clone()),
        };
        kg.insert(Triple {
            subject,
            predicate,
            object,
        });
    }
    kg
}

fn pick_var<R: Rng>(rng: &mut R, n_vars: usize) -> Variable {
    Variable::new(VAR_NAMES[rng.gen_range(0..n_vars)])
}

fn random_object<R: Rng>(rng: &mut R, n_vars: usize) -> Term {
    match rng.gen_range(0..10) {
        0..=4 => Term::Variable(pick_var(rng, n_vars)),
        5..=7 => Term::Iri(entities().choose(rng).unwrap().clone()),
        _ => Term::Literal(literals().choose(rng).unwrap().clone()),
    }
}

fn random_filter<R: Rng>(rng: &mut R, vars: &[Variable]) -> FilterExpr {
    let v = Term::Variable(vars.choose(rng).unwrap().clone());
    let cmp = *Comparator::ALL.choose(rng).unwrap();
    match rng.gen_range(0..5) {
        0 => FilterExpr::contains(v, Term::Literal(Literal::string(*["alp", "ta", "尼"].choose(rng).unwrap()))),
        1 => FilterExpr::str_starts(v, Term::Literal(Literal::string(*["alpha", "b"].choose(rng).unwrap()))),
        2 => FilterExpr::lang_equals(v, Term::Literal(Literal::string(*["en", "zh"].choose(rng).unwrap()))),
        3 => FilterExpr::year(v, cmp, Term::Literal(Literal::number(*["1073", "1950", "2000"].choose(rng).unwrap()))),
        _ => {
            let rhs = match rng.gen_range(0..4) {
                0 => Term::Variable(vars.choose(rng).unwrap().clone()),
                1 => Term::Literal(Literal::date("1900-06-01")),
                2 => Term::Iri(entities().choose(rng).unwrap().clone()),
                _ => Term::Literal(Literal::number(*["0", "2", "3"].choose(rng).unwrap())),
            };
            FilterExpr::compare(v, cmp, rhs)
        }
    }
}

/// A random well-formed query with at most `max_vars` (≤ 4) variable names.
/// Every keyword construct of the subset occurs with positive probability.
pub fn random_query<R: Rng>(rng: &mut R, max_vars: usize) -> Query {
    let n_vars = rng.gen_range(1..=max_vars.min(VAR_NAMES.len()));
    let n_patterns = rng.gen_range(1..=4);
    let rels = relations();
    let mut patterns = Vec::new();
    for _ in 0..n_patterns {
        let subject = if rng.gen_bool(0.7) {
            Term::Variable(pick_var(rng, n_vars))
        } else {
            Term::Iri(entities().choose(rng).unwrap().clone())
        };
        let predicate = if rng.gen_bool(0.15) {
            Term::Variable(pick_var(rng, n_vars))
        } else {
            Term::Iri(rels.choose(rng).unwrap().clone())
        };
        let object = random_object(rng, n_vars);
        patterns.push(TriplePattern::new(subject, predicate, object));
    }
    finish_query(rng, patterns)
}

/// A random query built by lifting connected graph triples into patterns,
/// so that it usually has answers on `kg`. Falls back to [`random_query`]
/// on an empty graph.
pub fn random_query_for<R: Rng>(rng: &mut R, kg: &KnowledgeGraph, max_vars: usize) -> Query {
    let triples = kg.triples();
    if triples.is_empty() {
        return random_query(rng, max_vars);
    }
    let mut chosen: Vec<&Triple> = vec![triples.choose(rng).unwrap()];
    for _ in 1..rng.gen_range(1..=3) {
        let linked: Vec<&Triple> = triples
            .iter()
            .filter(|t| !chosen.contains(t))
            .filter(|t| chosen.iter().any(|c| [&c.subject, &c.object].contains(&&t.subject) || [&c.subject, &c.object].contains(&&t.object)))
            .collect();
        match linked.choose(rng) {
            Some(t) => chosen.push(t),
            None => break,
        }
    }
    let mut lifted: Vec<(Value, Variable)> = Vec::new();
    let mut lift = |v: Value, p: f64, rng: &mut R| -> Term {
        if let Some((_, var)) = lifted.iter().find(|(x, _)| *x == v) {
            return Term::Variable(var.clone());
        }
        let is_statement = matches!(v, Value::Statement(_));
        if (is_statement || rng.gen_bool(p)) && lifted.len() < max_vars.min(VAR_NAMES.len()) {
            let var = Variable::new(VAR_NAMES[lifted.len()]);
            lifted.push((v, var.clone()));
            return Term::Variable(var);
        }
        match v {
            Value::Iri(i) => Term::Iri(i),
            Value::Literal(l) => Term::Literal(l),
            // Out of variable names: fall back to a fresh entity.
            Value::Statement(_) => Term::Iri(entities().choose(rng).unwrap().clone()),
        }
    };
    let patterns = chosen
        .into_iter()
        .map(|t| {
            let s = lift(t.subject.clone(), 0.6, rng);
            let p = lift(Value::Iri(t.predicate.clone()), 0.1, rng);
            let o = lift(t.object.clone(), 0.6, rng);
            TriplePattern::new(s, p, o)
        })
        .collect();
    finish_query(rng, patterns)
}

fn finish_query<R: Rng>(rng: &mut R, patterns: Vec<TriplePattern>) -> Query {
    let mut vars: Vec<Variable> = Vec::new();
    for p in &patterns {
        for t in p.terms() {
            if let Term::Variable(v) = t {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
    }

    let mut filters = Vec::new();
    if !vars.is_empty() {
        for _ in 0..rng.gen_range(0..=2) {
            filters.push(random_filter(rng, &vars));
        }
    }

    let mut q = if vars.is_empty() || rng.gen_bool(0.2) {
        Query {
            form: QueryForm::Ask,
            patterns,
            filters,
            order_by: None,
            limit: None,
        }
    } else if rng.gen_bool(0.2) {
        Query {
            form: QueryForm::Select {
                projection: vec![vars.choose(rng).unwrap().clone()],
                distinct: rng.gen_bool(0.5),
                count: true,
            },
            patterns,
            filters,
            order_by: None,
            limit: None,
        }
    } else {
        let k = rng.gen_range(1..=vars.len().min(3));
        let mut projection = vars.clone();
        projection.shuffle(rng);
        projection.truncate(k);
        Query {
            form: QueryForm::Select {
                projection,
                distinct: rng.gen_bool(0.4),
                count: false,
            },
            patterns,
            filters,
            order_by: None,
            limit: None,
        }
    };
    if !q.is_ask() && !q.is_count() {
        if rng.gen_bool(0.4) {
            q.order_by = Some(OrderBy {
                variable: vars.choose(rng).unwrap().clone(),
                direction: if rng.gen_bool(0.5) {
                    Direction::Ascending
                } else {
                    Direction::Descending
                },
            });
        }
        if rng.gen_bool(0.4) {
            q.limit = Some(rng.gen_range(1..=5));
        }
    }
    q
}

/// A random graph and a query over it; three cases in four lift the query
/// from the graph so that answers are common.
pub fn random_case<R: Rng>(rng: &mut R, max_triples: usize, max_vars: usize) -> (KnowledgeGraph, Query) {
    let kg = random_graph(rng, max_triples);
    let q = if rng.gen_bool(0.75) {
        random_query_for(rng, &kg, max_vars)
    } else {
        random_query(rng, max_vars)
    };
    (kg, q)
}

/// Same query with patterns and filters shuffled.
pub fn shuffled<R: Rng>(rng: &mut R, q: &Query) -> Query {
    let mut out = q.clone();
    out.patterns.shuffle(rng);
    out.filters.shuffle(rng);
    out
}

/// Same query with every variable consistently renamed.
pub fn renamed(q: &Query) -> Query {
    q.map_variables(|v| Variable::new(format!("r_{}", v.name())))
}

// ---------------------------------------------------------------------------
// Brute-force evaluator: enumerates every assignment of graph terms to the
// query variables and checks each pattern by direct membership.

fn domain(kg: &KnowledgeGraph) -> Vec<Value> {
    let mut d: BTreeSet<Value> = BTreeSet::new();
    for t in kg.triples() {
        d.insert(t.subject.clone());
        d.insert(Value::Iri(t.predicate.clone()));
        d.insert(t.object.clone());
    }
    d.into_iter().collect()
}

fn ground(t: &Term, a: &BTreeMap<Variable, Value>) -> Value {
    match t {
        Term::Variable(v) => a[v].clone(),
        Term::Iri(i) => Value::Iri(i.clone()),
        Term::Literal(l) => Value::Literal(l.clone()),
    }
}

pub fn brute_force_bindings(kg: &KnowledgeGraph, patterns: &[TriplePattern]) -> BTreeSet<Binding> {
    let mut vars: Vec<Variable> = Vec::new();
    for p in patterns {
        for t in p.terms() {
            if let Term::Variable(v) = t {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
    }
    let dom = domain(kg);
    let mut out = BTreeSet::new();
    if !vars.is_empty() && dom.is_empty() {
        return out;
    }
    let total = dom.len().pow(vars.len() as u32);
    for code in 0..total {
        let mut a = BTreeMap::new();
        let mut c = code;
        for v in &vars {
            a.insert(v.clone(), dom[c % dom.len()].clone());
            c /= dom.len();
        }
        let ok = patterns.iter().all(|p| {
            let Value::Iri(pred) = ground(&p.predicate, &a) else {
                return false;
            };
            kg.contains(&Triple {
                subject: ground(&p.subject, &a),
                predicate: pred,
                object: ground(&p.object, &a),
            })
        });
        if ok {
            out.insert(Binding(a));
        }
    }
    out
}

#[derive(Debug, PartialEq)]
enum Kind {
    Num(f64),
    Date((i64, u32, u32)),
    Str(String, Option<String>),
    Other,
}

fn kind(v: &Value) -> Kind {
    match v {
        Value::Literal(l) => match &l.tag {
            LiteralTag::Numeric => Kind::Num(l.lexical.parse().unwrap()),
            LiteralTag::Date => Kind::Date(parse_date(&l.lexical).unwrap()),
            LiteralTag::Lang(t) => Kind::Str(l.lexical.clone(), Some(t.clone())),
            LiteralTag::None => Kind::Str(l.lexical.clone(), None),
        },
        _ => Kind::Other,
    }
}

/// None means a type error: the binding is dropped.
fn oracle_filter(f: &FilterExpr, a: &BTreeMap<Variable, Value>) -> Option<bool> {
    let l = ground(&f.args[0], a);
    let r = ground(&f.args[1], a);
    let holds = |o: Ordering| f.comparator.unwrap().holds(o);
    match f.op {
        FilterOp::Contains => match (kind(&l), kind(&r)) {
            (Kind::Str(x, _), Kind::Str(y, _)) => Some(x.contains(&y)),
            _ => None,
        },
        FilterOp::StrStarts => match (kind(&l), kind(&r)) {
            (Kind::Str(x, _), Kind::Str(y, _)) => Some(x.starts_with(&y)),
            _ => None,
        },
        FilterOp::LangEquals => {
            let Value::Literal(_) = &l else { return None };
            let Kind::Str(want, _) = kind(&r) else { return None };
            let tag = match kind(&l) {
                Kind::Str(_, Some(t)) => t,
                _ => String::new(),
            };
            Some(tag.eq_ignore_ascii_case(&want))
        }
        FilterOp::YearCompare => match (kind(&l), kind(&r)) {
            (Kind::Date((y, _, _)), Kind::Num(n)) => Some(holds((y as f64).partial_cmp(&n).unwrap())),
            _ => None,
        },
        FilterOp::NumericCompare => match (kind(&l), kind(&r)) {
            (Kind::Num(x), Kind::Num(y)) => Some(holds(x.partial_cmp(&y).unwrap())),
            (Kind::Date(x), Kind::Date(y)) => Some(holds(x.cmp(&y))),
            (Kind::Str(x, _), Kind::Str(y, _)) => Some(holds(x.cmp(&y))),
            (Kind::Other, Kind::Other) if f.comparator == Some(Comparator::Eq) => Some(l == r),
            _ => None,
        },
    }
}

fn oracle_order(a: &Value, b: &Value) -> Ordering {
    let rank = |v: &Value| match (v, kind(v)) {
        (_, Kind::Num(_)) => 0,
        (_, Kind::Date(_)) => 1,
        (_, Kind::Str(..)) => 2,
        (Value::Iri(_), _) => 3,
        _ => 4,
    };
    match (kind(a), kind(b)) {
        (Kind::Num(x), Kind::Num(y)) => x.partial_cmp(&y).unwrap(),
        (Kind::Date(x), Kind::Date(y)) => x.cmp(&y),
        (Kind::Str(x, _), Kind::Str(y, _)) => x.cmp(&y),
        _ => rank(a).cmp(&rank(b)).then_with(|| a.to_string().cmp(&b.to_string())),
    }
}

/// Reference semantics for a whole query: filter, then DISTINCT, ORDER BY
/// (ties by rendering) and LIMIT.
pub fn brute_force_execute(kg: &KnowledgeGraph, q: &Query) -> AnswerSet {
    let survivors: Vec<BTreeMap<Variable, Value>> = brute_force_bindings(kg, &q.patterns)
        .into_iter()
        .map(|b| b.0)
        .filter(|a| q.filters.iter().all(|f| oracle_filter(f, a) == Some(true)))
        .collect();
    match &q.form {
        QueryForm::Ask => AnswerSet::Boolean(!survivors.is_empty()),
        QueryForm::Select {
            projection,
            distinct,
            count,
        } => {
            if *count {
                let vals: BTreeSet<&Value> = survivors.iter().map(|a| &a[&projection[0]]).collect();
                return AnswerSet::Count(vals.len() as u64);
            }
            let mut rows: Vec<(Option<Value>, Vec<Value>)> = survivors
                .iter()
                .map(|a| {
                    let key = q.order_by.as_ref().map(|o| a[&o.variable].clone());
                    (key, projection.iter().map(|v| a[v].clone()).collect())
                })
                .collect();
            let render = |r: &Vec<Value>| r.iter().map(|v| v.to_string()).collect::<Vec<_>>();
            rows.sort_by(|(ka, ra), (kb, rb)| {
                let k = match (ka, kb, q.order_by.as_ref().map(|o| o.direction)) {
                    (Some(x), Some(y), Some(Direction::Ascending)) => oracle_order(x, y),
                    (Some(x), Some(y), Some(Direction::Descending)) => oracle_order(y, x),
                    _ => Ordering::Equal,
                };
                k.then_with(|| render(ra).cmp(&render(rb)))
            });
            let mut out: Vec<Vec<Value>> = Vec::new();
            for (_, r) in rows {
                if *distinct && out.contains(&r) {
                    continue;
                }
                out.push(r);
            }
            if let Some(n) = q.limit {
                out.truncate(n as usize);
            }
            AnswerSet::Rows(out)
        }
    }
}
