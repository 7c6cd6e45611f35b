//! Answer F1 and order-free exact query match.
//!
//! A query is decomposed into a set of components: one per triple pattern,
//! one per filter, one per modifier and one for the query form. Variables
//! are renamed canonically, so two queries match when they are equal up to
//! variable names and the order of patterns and filters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{classify_question_type, QuestionType};
use crate::kg::{execute, AnswerSet, ExecError, KnowledgeGraph, Value};
use crate::sparql::{parse_query, validate, Direction, Query, QueryForm, Term, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("gold query for record {id} failed to execute: {source}")]
    GoldExecution { id: String, source: ExecError },
}

/// One decomposed component, e.g. `(?v1, wdt:P31, wd:Q5)` or
/// `(?v1, order by, ascend)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Component(pub Vec<String>);

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TripleSet {
    pub components: BTreeSet<Component>,
}

impl TripleSet {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, parts: &[&str]) -> bool {
        self.components
            .contains(&Component(parts.iter().map(|s| s.to_string()).collect()))
    }
}

impl fmt::Display for TripleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(Component::to_string).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// A component with variable slots left open: each slot is either fixed
/// text or a variable to be named later.
#[derive(Debug, Clone)]
struct Template(Vec<Slot>);

#[derive(Debug, Clone)]
enum Slot {
    Text(String),
    Var(usize),
}

fn templates(q: &Query) -> (Vec<Template>, usize) {
    let mut vars: Vec<Variable> = Vec::new();
    let index = |v: &Variable, vars: &mut Vec<Variable>| -> usize {
        match vars.iter().position(|x| x == v) {
            Some(i) => i,
            None => {
                vars.push(v.clone());
                vars.len() - 1
            }
        }
    };
    let term_slot = |t: &Term, vars: &mut Vec<Variable>| match t {
        Term::Variable(v) => Slot::Var(index(v, vars)),
        other => Slot::Text(other.to_string()),
    };
    let text = |s: &str| Slot::Text(s.to_string());

    let mut out = Vec::new();
    for p in &q.patterns {
        out.push(Template(vec![
            term_slot(&p.subject, &mut vars),
            term_slot(&p.predicate, &mut vars),
            term_slot(&p.object, &mut vars),
        ]));
    }
    for f in &q.filters {
        let mut slots = vec![
            text("filter"),
            text(f.op.name()),
            text(f.comparator.map(|c| c.symbol()).unwrap_or("")),
        ];
        slots.extend(f.args.iter().map(|a| term_slot(a, &mut vars)));
        out.push(Template(slots));
    }
    match &q.form {
        QueryForm::Ask => out.push(Template(vec![text("query"), text("form"), text("ask")])),
        QueryForm::Select {
            projection,
            distinct,
            count,
        } => {
            let form = if *count { "count" } else { "select" };
            out.push(Template(vec![text("query"), text("form"), text(form)]));
            if *distinct {
                out.push(Template(vec![text("query"), text("distinct"), text("true")]));
            }
            for (i, v) in projection.iter().enumerate() {
                out.push(Template(vec![
                    Slot::Var(index(v, &mut vars)),
                    text("select"),
                    Slot::Text(i.to_string()),
                ]));
            }
        }
    }
    if let Some(o) = &q.order_by {
        let dir = match o.direction {
            Direction::Ascending => "ascend",
            Direction::Descending => "descend",
        };
        out.push(Template(vec![
            Slot::Var(index(&o.variable, &mut vars)),
            text("order by"),
            text(dir),
        ]));
    }
    if let Some(n) = q.limit {
        out.push(Template(vec![text("query"), text("limit"), Slot::Text(n.to_string())]));
    }
    (out, vars.len())
}

fn render(t: &Template, name: impl Fn(usize) -> String) -> Component {
    Component(
        t.0.iter()
            .map(|s| match s {
                Slot::Text(x) => x.clone(),
                Slot::Var(i) => name(*i),
            })
            .collect(),
    )
}

/// Upper bound on labelings tried when refinement leaves ties.
const MAX_LABELINGS: usize = 50_000;

/// Colour refinement over the variable/component incidence structure.
/// Returns a colour rank per variable; equal ranks are not yet told apart.
fn refine(templates: &[Template], n_vars: usize) -> Vec<usize> {
    let mut colour = vec![0usize; n_vars];
    let mut classes = 1;
    for _ in 0..=n_vars {
        let mut sigs: Vec<Vec<String>> = vec![Vec::new(); n_vars];
        for t in templates {
            for (pos, slot) in t.0.iter().enumerate() {
                if let Slot::Var(v) = slot {
                    let c = render(t, |i| if i == *v { "*".into() } else { format!("#{}", colour[i]) });
                    sigs[*v].push(format!("{pos}:{}", c.0.join("\u{1f}")));
                }
            }
        }
        for s in &mut sigs {
            s.sort();
        }
        let keyed: Vec<(usize, &Vec<String>)> = colour.iter().copied().zip(sigs.iter()).collect();
        let mut distinct: Vec<(usize, &Vec<String>)> = keyed.clone();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> = keyed
            .iter()
            .map(|k| distinct.binary_search(k).expect("present"))
            .collect();
        let n_classes = distinct.len();
        colour = next;
        if n_classes == classes {
            break;
        }
        classes = n_classes;
    }
    colour
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Splits `q` into its order-free component set with canonical variable names.
pub fn decompose(q: &Query) -> Result<TripleSet, MetricError> {
    let diags = validate(q);
    if let Some(d) = diags.first() {
        return Err(MetricError::InvalidQuery(d.to_string()));
    }
    Ok(decompose_unchecked(q))
}

fn decompose_unchecked(q: &Query) -> TripleSet {
    let (templates, n_vars) = templates(q);
    let colour = refine(&templates, n_vars);

    // Variables grouped by colour, groups in colour order.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, c) in colour.iter().enumerate() {
        groups.entry(*c).or_default().push(v);
    }
    let group_perms: Vec<Vec<Vec<usize>>> = groups.values().map(|g| permutations_capped(g)).collect();
    let total: usize = group_perms
        .iter()
        .map(Vec::len)
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);

    let mut best: Option<Vec<Component>> = None;
    let mut choice = vec![0usize; group_perms.len()];
    for _ in 0..total.min(MAX_LABELINGS) {
        let mut label = vec![0usize; n_vars];
        let mut next = 1;
        for (g, perms) in group_perms.iter().enumerate() {
            for &v in &perms[choice[g]] {
                label[v] = next;
                next += 1;
            }
        }
        let mut comps: Vec<Component> = templates.iter().map(|t| render(t, |i| format!("?v{}", label[i]))).collect();
        comps.sort();
        comps.dedup();
        if best.as_ref().is_none_or(|b| comps < *b) {
            best = Some(comps);
        }
        // odometer increment
        for g in (0..choice.len()).rev() {
            choice[g] += 1;
            if choice[g] < group_perms[g].len() {
                break;
            }
            choice[g] = 0;
        }
    }
    TripleSet {
        components: best.unwrap_or_default().into_iter().collect(),
    }
}

fn permutations_capped(group: &[usize]) -> Vec<Vec<usize>> {
    // 8! already exceeds the labeling budget on its own.
    if group.len() > 8 {
        return vec![group.to_vec()];
    }
    permutations(group)
}

/// True iff both queries decompose to the same component set.
pub fn exact_set_match(pred: &Query, gold: &Query) -> Result<bool, MetricError> {
    Ok(decompose(pred)? == decompose(gold)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl F1Score {
    pub fn from_pr(precision: f64, recall: f64) -> F1Score {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        F1Score { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Answer {
    Bool(bool),
    Count(u64),
    Row(Vec<Value>),
}

fn answer_items(a: &AnswerSet) -> BTreeSet<Answer> {
    match a {
        AnswerSet::Boolean(b) => [Answer::Bool(*b)].into(),
        AnswerSet::Count(n) => [Answer::Count(*n)].into(),
        AnswerSet::Rows(rows) => rows.iter().cloned().map(Answer::Row).collect(),
    }
}

/// Set-based precision/recall/F1 between two answer sets. Booleans and
/// counts are singleton sets; two empty sets score 1.
pub fn answer_f1(pred: &AnswerSet, gold: &AnswerSet) -> F1Score {
    let p = answer_items(pred);
    let g = answer_items(gold);
    if p.is_empty() && g.is_empty() {
        return F1Score::from_pr(1.0, 1.0);
    }
    let hit = p.intersection(&g).count() as f64;
    let precision = if p.is_empty() { 0.0 } else { hit / p.len() as f64 };
    let recall = if g.is_empty() { 0.0 } else { hit / g.len() as f64 };
    F1Score::from_pr(precision, recall)
}

/// One (prediction, gold) pair to score. A missing prediction scores zero.
#[derive(Debug, Clone)]
pub struct EvalRecord {
    pub id: String,
    pub pred: Option<String>,
    pub gold: Query,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordScore {
    pub id: String,
    pub question_type: QuestionType,
    pub answer_f1: f64,
    pub exact_match: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeScore {
    pub n: usize,
    pub answer_f1: f64,
    pub exact_match: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub n: usize,
    pub answer_f1: f64,
    pub exact_match: f64,
    pub by_type: BTreeMap<QuestionType, TypeScore>,
    pub records: Vec<RecordScore>,
}

impl CorpusReport {
    /// Key-value report, one metric per line.
    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "records: {}\nanswer_f1: {:.4}\nexact_match: {:.4}\n",
            self.n, self.answer_f1, self.exact_match
        );
        for (t, score) in &self.by_type {
            s.push_str(&format!(
                "type.{t}.n: {}\ntype.{t}.answer_f1: {:.4}\ntype.{t}.exact_match: {:.4}\n",
                score.n, score.answer_f1, score.exact_match
            ));
        }
        s
    }

    /// Per-record scores keyed by record id.
    pub fn to_json(&self) -> serde_json::Value {
        let records: serde_json::Map<String, serde_json::Value> = self
            .records
            .iter()
            .map(|r| (r.id.clone(), serde_json::to_value(r).expect("serialisable")))
            .collect();
        serde_json::json!({
            "n": self.n,
            "answer_f1": self.answer_f1,
            "exact_match": self.exact_match,
            "by_type": self.by_type.iter().map(|(k, v)| (k.to_string(), serde_json::to_value(v).unwrap())).collect::<serde_json::Map<_, _>>(),
            "records": records,
        })
    }
}

fn score_record(r: &EvalRecord, kg: &KnowledgeGraph) -> Result<RecordScore, MetricError> {
    let question_type = classify_question_type(&r.gold);
    let gold_answers = execute(kg, &r.gold).map_err(|source| MetricError::GoldExecution {
        id: r.id.clone(),
        source,
    })?;
    let fail = |msg: String| RecordScore {
        id: r.id.clone(),
        question_type,
        answer_f1: 0.0,
        exact_match: false,
        error: Some(msg),
    };
    let Some(text) = &r.pred else {
        return Ok(fail("missing prediction".into()));
    };
    let pred = match parse_query(text) {
        Ok(q) => q,
        Err(e) => return Ok(fail(format!("{}: {e}", e.code()))),
    };
    if let Some(d) = validate(&pred).first() {
        return Ok(fail(format!("invalid: {d}")));
    }
    let exact_match = exact_set_match(&pred, &r.gold)?;
    let (answer_f1, error) = match execute(kg, &pred) {
        Ok(a) => (self::answer_f1(&a, &gold_answers).f1, None),
        Err(e) => (0.0, Some(e.to_string())),
    };
    Ok(RecordScore {
        id: r.id.clone(),
        question_type,
        answer_f1,
        exact_match,
        error,
    })
}

/// Macro-averaged answer F1, exact-match rate and a per-question-type
/// breakdown over a corpus of predictions.
pub fn corpus_scores(records: &[EvalRecord], kg: &KnowledgeGraph) -> Result<CorpusReport, MetricError> {
    if records.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    for r in records {
        if let Some(d) = validate(&r.gold).first() {
            return Err(MetricError::InvalidQuery(format!("gold {}: {d}", r.id)));
        }
    }
    let scores = records
        .iter()
        .map(|r| score_record(r, kg))
        .collect::<Result<Vec<_>, _>>()?;
    let n = scores.len();
    let mean = |xs: &[&RecordScore]| -> (f64, f64) {
        let k = xs.len() as f64;
        let f1 = xs.iter().map(|s| s.answer_f1).sum::<f64>() / k;
        let em = xs.iter().filter(|s| s.exact_match).count() as f64 / k;
        (f1, em)
    };
    let all: Vec<&RecordScore> = scores.iter().collect();
    let (answer_f1, exact_match) = mean(&all);
    let mut grouped: BTreeMap<QuestionType, Vec<&RecordScore>> = BTreeMap::new();
    for s in &scores {
        grouped.entry(s.question_type).or_default().push(s);
    }
    let by_type = grouped
        .into_iter()
        .map(|(t, xs)| {
            let (f, e) = mean(&xs);
            (
                t,
                TypeScore {
                    n: xs.len(),
                    answer_f1: f,
                    exact_match: e,
                },
            )
        })
        .collect();
    Ok(CorpusReport {
        n,
        answer_f1,
        exact_match,
        by_type,
        records: scores,
    })
}
