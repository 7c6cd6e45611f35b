use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::{DefaultSegmenter, QuestionRecord, Segmenter};
use crate::sparql::Keyword;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("empty corpus")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_questions: usize,
    /// Mean question length in characters.
    pub avg_question_len: f64,
    pub vocab_size: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_keywords: usize,
}

impl fmt::Display for CorpusStats {
    /// Key-value lines named after the usual dataset-statistics rows.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# Question: {}", self.n_questions)?;
        writeln!(f, "Avg. # Q len: {:.1}", self.avg_question_len)?;
        writeln!(f, "# Vocab: {}", self.vocab_size)?;
        writeln!(f, "# Entities: {}", self.n_entities)?;
        writeln!(f, "# Relations: {}", self.n_relations)?;
        writeln!(f, "# Keyword: {}", self.n_keywords)
    }
}

pub fn corpus_stats(records: &[QuestionRecord]) -> Result<CorpusStats, StatsError> {
    corpus_stats_with(records, &DefaultSegmenter)
}

/// Statistics over the Chinese questions and gold queries. Entities are
/// distinct `wd:` IRIs; relations are distinct property IRIs, so `p:P39`
/// and `ps:P39` count separately.
pub fn corpus_stats_with(records: &[QuestionRecord], segmenter: &dyn Segmenter) -> Result<CorpusStats, StatsError> {
    if records.is_empty() {
        return Err(StatsError::EmptyCorpus);
    }
    let mut vocab = BTreeSet::new();
    let mut entities = BTreeSet::new();
    let mut relations = BTreeSet::new();
    let mut keywords: BTreeSet<Keyword> = BTreeSet::new();
    let mut total_len = 0usize;
    for r in records {
        total_len += r.question_zh.chars().count();
        vocab.extend(segmenter.tokens(&r.question_zh));
        for iri in r.gold.iris() {
            if iri.is_entity() {
                entities.insert(iri);
            } else {
                relations.insert(iri);
            }
        }
        keywords.extend(r.gold.keywords());
    }
    Ok(CorpusStats {
        n_questions: records.len(),
        avg_question_len: total_len as f64 / records.len() as f64,
        vocab_size: vocab.len(),
        n_entities: entities.len(),
        n_relations: relations.len(),
        n_keywords: keywords.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Vec<QuestionRecord> {
        vec![
            QuestionRecord::from_gold("1", "Stevie Nicks是作曲家吗？", "ASK WHERE { wd:Q234691 wdt:P101 wd:Q207628 }").unwrap(),
            QuestionRecord::from_gold(
                "2",
                "格里高利七世在什么时候成为教皇？",
                "SELECT ?value1 ?obj WHERE { wd:Q133063 p:P39 ?s . ?s ps:P39 ?obj . ?s pq:P580 ?value1 }",
            )
            .unwrap(),
        ]
    }

    #[test]
    fn table_counts() {
        let s = corpus_stats(&table()).unwrap();
        assert_eq!((s.n_questions, s.n_entities, s.n_relations), (2, 3, 4));
        assert_eq!(s.n_keywords, 2);
        assert!(s.to_string().contains("# Relations: 4"));
    }

    #[test]
    fn average_length() {
        let r = QuestionRecord::from_gold("x", "一二三四五六七八九十", "ASK WHERE { wd:Q1 wdt:P1 wd:Q2 }").unwrap();
        let s = corpus_stats(&[r]).unwrap();
        assert_eq!(s.avg_question_len, 10.0);
        assert_eq!(s.vocab_size, 10);
        assert_eq!(corpus_stats(&[]), Err(StatsError::EmptyCorpus));
    }
}
