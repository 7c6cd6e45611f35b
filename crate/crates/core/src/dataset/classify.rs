use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sparql::{FilterOp, LiteralTag, Prefix, Query, Term};

/// Question categories used for per-type reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionType {
    Fact,
    FactDedup,
    Dual,
    Boolean,
    Counting,
    Date,
    MaxMin,
    Qualifier,
}

impl QuestionType {
    pub const ALL: [QuestionType; 8] = [
        QuestionType::Fact,
        QuestionType::FactDedup,
        QuestionType::Dual,
        QuestionType::Boolean,
        QuestionType::Counting,
        QuestionType::Date,
        QuestionType::MaxMin,
        QuestionType::Qualifier,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::Fact => "Fact",
            QuestionType::FactDedup => "FactDedup",
            QuestionType::Dual => "Dual",
            QuestionType::Boolean => "Boolean",
            QuestionType::Counting => "Counting",
            QuestionType::Date => "Date",
            QuestionType::MaxMin => "MaxMin",
            QuestionType::Qualifier => "Qualifier",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Assigns the first matching type, checked in this order:
/// ASK, COUNT, two or more projected variables, ORDER BY with LIMIT,
/// a `pq:` predicate, a YEAR filter or date literal, DISTINCT, otherwise Fact.
pub fn classify_question_type(q: &Query) -> QuestionType {
    if q.is_ask() {
        return QuestionType::Boolean;
    }
    if q.is_count() {
        return QuestionType::Counting;
    }
    if q.projection().len() >= 2 {
        return QuestionType::Dual;
    }
    if q.order_by.is_some() && q.limit.is_some() {
        return QuestionType::MaxMin;
    }
    let has_qualifier = q
        .patterns
        .iter()
        .any(|p| matches!(&p.predicate, Term::Iri(i) if i.prefix() == Prefix::Pq));
    if has_qualifier {
        return QuestionType::Qualifier;
    }
    let has_date = q.filters.iter().any(|f| f.op == FilterOp::YearCompare)
        || q.literals().any(|l| l.tag == LiteralTag::Date);
    if has_date {
        return QuestionType::Date;
    }
    if q.is_distinct() {
        return QuestionType::FactDedup;
    }
    QuestionType::Fact
}
