use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparql::{parse_query, validate, Iri, Query};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("record {index}: {message}")]
    Schema { index: usize, message: String },
    #[error("duplicate record id `{id}` at record {index}")]
    DuplicateId { id: String, index: usize },
    #[error("corpus is not a JSON array: {0}")]
    NotAnArray(String),
}

/// On-disk shape of one corpus entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    question_zh: String,
    #[serde(default)]
    question_en: Option<String>,
    sparql: String,
    #[serde(default)]
    entities: Option<Vec<String>>,
    #[serde(default)]
    relations: Option<Vec<String>>,
    #[serde(default)]
    template_type: Option<String>,
    #[serde(default)]
    labels: BTreeMap<String, String>,
}

/// A loaded question with its gold query and candidate lists.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionRecord {
    pub id: String,
    pub question_zh: String,
    pub question_en: Option<String>,
    pub gold_sparql: String,
    pub gold: Query,
    pub entity_candidates: Vec<Iri>,
    pub relation_candidates: Vec<Iri>,
    pub template_type: Option<String>,
    /// Surface labels for candidate IRIs, used to find mentions in the question.
    pub labels: BTreeMap<Iri, String>,
}

impl QuestionRecord {
    /// Builds a record whose candidates are exactly the IRIs of the gold query.
    pub fn from_gold(id: impl Into<String>, question: impl Into<String>, sparql: &str) -> Result<Self, String> {
        let gold = parse_query(sparql).map_err(|e| e.render(sparql))?;
        if let Some(d) = validate(&gold).first() {
            return Err(d.to_string());
        }
        let (entity_candidates, relation_candidates) = gold_candidates(&gold);
        Ok(QuestionRecord {
            id: id.into(),
            question_zh: question.into(),
            question_en: None,
            gold_sparql: sparql.to_string(),
            gold,
            entity_candidates,
            relation_candidates,
            template_type: None,
            labels: BTreeMap::new(),
        })
    }

    /// Candidate IRIs in input order: entities first, then relations.
    pub fn candidates(&self) -> impl Iterator<Item = &Iri> {
        self.entity_candidates.iter().chain(self.relation_candidates.iter())
    }
}

/// A record dropped during loading, and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    pub index: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub records: Vec<QuestionRecord>,
    pub skipped: Vec<SkippedRecord>,
}

fn gold_candidates(q: &Query) -> (Vec<Iri>, Vec<Iri>) {
    let mut ents = Vec::new();
    let mut rels = Vec::new();
    for iri in q.iris() {
        let list = if iri.is_entity() { &mut ents } else { &mut rels };
        if !list.contains(iri) {
            list.push(iri.clone());
        }
    }
    (ents, rels)
}

fn parse_iris(index: usize, field: &str, items: &[String]) -> Result<Vec<Iri>, CorpusError> {
    items
        .iter()
        .map(|s| {
            s.parse::<Iri>().map_err(|e| CorpusError::Schema {
                index,
                message: format!("{field}: {e}"),
            })
        })
        .collect()
}

/// Parses a corpus file: a JSON array of records with fields `id`,
/// `question_zh`, `sparql` and optional `question_en`, `entities`,
/// `relations`, `template_type` and `labels` (IRI to surface label).
///
/// Missing candidate lists are filled from the gold query. Records whose
/// gold query fails to parse or validate, or whose candidate lists omit a
/// gold IRI, are skipped and reported in [`LoadedCorpus::skipped`].
pub fn parse_corpus(text: &str) -> Result<LoadedCorpus, CorpusError> {
    if text.trim().is_empty() {
        return Ok(LoadedCorpus::default());
    }
    let values: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| CorpusError::NotAnArray(e.to_string()))?;
    let mut out = LoadedCorpus::default();
    let mut seen = BTreeSet::new();
    for (index, value) in values.into_iter().enumerate() {
        let raw: RawRecord = serde_json::from_value(value).map_err(|e| CorpusError::Schema {
            index,
            message: e.to_string(),
        })?;
        if !seen.insert(raw.id.clone()) {
            return Err(CorpusError::DuplicateId { id: raw.id, index });
        }
        let entities = raw.entities.as_deref().map(|v| parse_iris(index, "entities", v)).transpose()?;
        let relations = raw.relations.as_deref().map(|v| parse_iris(index, "relations", v)).transpose()?;
        let labels = raw
            .labels
            .iter()
            .map(|(k, v)| {
                k.parse::<Iri>()
                    .map(|i| (i, v.clone()))
                    .map_err(|e| CorpusError::Schema {
                        index,
                        message: format!("labels: {e}"),
                    })
            })
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        let skip = |reason: String| SkippedRecord {
            index,
            id: raw.id.clone(),
            reason,
        };

        let gold = match parse_query(&raw.sparql) {
            Ok(q) => q,
            Err(e) => {
                out.skipped.push(skip(e.render(&raw.sparql)));
                continue;
            }
        };
        if let Some(d) = validate(&gold).first() {
            out.skipped.push(skip(d.to_string()));
            continue;
        }
        let (gold_ents, gold_rels) = gold_candidates(&gold);
        let entity_candidates = entities.unwrap_or_else(|| gold_ents.clone());
        let relation_candidates = relations.unwrap_or_else(|| gold_rels.clone());
        if let Some(bad) = entity_candidates.iter().find(|i| !i.is_entity()) {
            out.skipped.push(skip(format!("entity candidate {bad} is not a wd: item")));
            continue;
        }
        if let Some(bad) = relation_candidates.iter().find(|i| !i.is_relation()) {
            out.skipped.push(skip(format!("relation candidate {bad} is not a property")));
            continue;
        }
        let missing = gold_ents
            .iter()
            .filter(|i| !entity_candidates.contains(i))
            .chain(gold_rels.iter().filter(|i| !relation_candidates.contains(i)))
            .next();
        if let Some(m) = missing {
            out.skipped.push(skip(format!("gold IRI {m} missing from candidates")));
            continue;
        }
        out.records.push(QuestionRecord {
            id: raw.id,
            question_zh: raw.question_zh,
            question_en: raw.question_en,
            gold_sparql: raw.sparql,
            gold,
            entity_candidates,
            relation_candidates,
            template_type: raw.template_type,
            labels,
        });
    }
    Ok(out)
}

/// Reads and parses a corpus file from disk.
pub fn load_corpus(path: impl AsRef<std::path::Path>) -> std::io::Result<Result<LoadedCorpus, CorpusError>> {
    Ok(parse_corpus(&std::fs::read_to_string(path)?))
}
