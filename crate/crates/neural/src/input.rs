//! Encoder input layout and the question graph over it.
//!
//! The sequence is `[CLS] q_1 … q_m [SEP] e_1 [SEP] … e_k [SEP] r_1 [SEP] … r_l [SEP]`:
//! question segments, then one symbol per entity candidate and one per
//! relation candidate, each followed by a separator.

use kbqa_core::dataset::{QuestionRecord, Segmenter};
use kbqa_core::sparql::{Iri, Prefix};
use ndarray::Array2;
use thiserror::Error;

use crate::vocab::{InputVocab, CLS, SEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    Question,
    Entity,
    Relation,
    Separator,
}

impl Segment {
    pub const COUNT: usize = 4;

    pub fn id(self) -> usize {
        self as usize
    }
}

/// Relation types between two input positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeType {
    None = 0,
    QuestionAdjacent = 1,
    QuestionEntityMention = 2,
    QuestionRelationMention = 3,
    EntityRelationCooccur = 4,
    WdtWd = 5,
    WdtP = 6,
    SameItem = 7,
}

impl EdgeType {
    pub const COUNT: usize = 8;

    pub const ALL: [EdgeType; 8] = [
        EdgeType::None,
        EdgeType::QuestionAdjacent,
        EdgeType::QuestionEntityMention,
        EdgeType::QuestionRelationMention,
        EdgeType::EntityRelationCooccur,
        EdgeType::WdtWd,
        EdgeType::WdtP,
        EdgeType::SameItem,
    ];

    pub fn id(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderInput {
    /// Input-vocabulary ids, one per position.
    pub tokens: Vec<usize>,
    pub segments: Vec<Segment>,
    /// Positions of the entity candidate symbols, in candidate order.
    pub entity_positions: Vec<usize>,
    /// Positions of the relation candidate symbols, in candidate order.
    pub relation_positions: Vec<usize>,
}

impl EncoderInput {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Edge-type id for every ordered pair of positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionGraph {
    pub edge_type: Array2<usize>,
}

impl QuestionGraph {
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.edge_type[[i, j]]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error("record {0} has no entity or no relation candidates")]
    EmptyCandidates(String),
}

/// Lays out a record and assigns edge types.
///
/// Edge rules: a position with itself is `SameItem`; neighbouring
/// question positions are `QuestionAdjacent`; a question
/// position inside an occurrence of a candidate's label is linked to that
/// candidate by a mention edge; entity and `wdt:` relation pairs are
/// `WdtWd`, other entity/relation pairs `EntityRelationCooccur`; two
/// relations on the same property number are `WdtP`. Everything else,
/// including all separator pairs, is `None`.
pub fn build_input(
    record: &QuestionRecord,
    vocab: &InputVocab,
    segmenter: &dyn Segmenter,
) -> Result<(EncoderInput, QuestionGraph), InputError> {
    if record.entity_candidates.is_empty() || record.relation_candidates.is_empty() {
        return Err(InputError::EmptyCandidates(record.id.clone()));
    }
    let question = &record.question_zh;
    let spans = segmenter.segment(question);

    let mut tokens = vec![vocab.id(CLS)];
    let mut segments = vec![Segment::Separator];
    let q_start = 1;
    for r in &spans {
        tokens.push(vocab.id(&question[r.clone()]));
        segments.push(Segment::Question);
    }
    tokens.push(vocab.id(SEP));
    segments.push(Segment::Separator);

    let mut entity_positions = Vec::new();
    for e in &record.entity_candidates {
        entity_positions.push(tokens.len());
        tokens.push(vocab.id(&e.to_string()));
        segments.push(Segment::Entity);
        tokens.push(vocab.id(SEP));
        segments.push(Segment::Separator);
    }
    let mut relation_positions = Vec::new();
    for r in &record.relation_candidates {
        relation_positions.push(tokens.len());
        tokens.push(vocab.id(&r.to_string()));
        segments.push(Segment::Relation);
        tokens.push(vocab.id(SEP));
        segments.push(Segment::Separator);
    }

    let n = tokens.len();
    let mut edges = Array2::from_elem((n, n), EdgeType::None.id());
    let mut set = |i: usize, j: usize, t: EdgeType| {
        edges[[i, j]] = t.id();
        edges[[j, i]] = t.id();
    };

    for k in 1..spans.len() {
        set(q_start + k - 1, q_start + k, EdgeType::QuestionAdjacent);
    }

    let mention = |iri: &Iri| -> Vec<usize> {
        let Some(label) = record.labels.get(iri).filter(|l| !l.is_empty()) else {
            return Vec::new();
        };
        let mut hits = Vec::new();
        for (at, _) in question.match_indices(label.as_str()) {
            let end = at + label.len();
            for (k, r) in spans.iter().enumerate() {
                if r.start < end && at < r.end && !hits.contains(&(q_start + k)) {
                    hits.push(q_start + k);
                }
            }
        }
        hits
    };
    for (e, &pos) in record.entity_candidates.iter().zip(&entity_positions) {
        for q in mention(e) {
            set(q, pos, EdgeType::QuestionEntityMention);
        }
    }
    for (r, &pos) in record.relation_candidates.iter().zip(&relation_positions) {
        for q in mention(r) {
            set(q, pos, EdgeType::QuestionRelationMention);
        }
    }

    for &ep in &entity_positions {
        for (r, &rp) in record.relation_candidates.iter().zip(&relation_positions) {
            let t = if r.prefix() == Prefix::Wdt {
                EdgeType::WdtWd
            } else {
                EdgeType::EntityRelationCooccur
            };
            set(ep, rp, t);
        }
    }
    for (a, (ra, &pa)) in record.relation_candidates.iter().zip(&relation_positions).enumerate() {
        for (rb, &pb) in record.relation_candidates.iter().zip(&relation_positions).skip(a + 1) {
            if ra.local_id() == rb.local_id() {
                set(pa, pb, EdgeType::WdtP);
            }
        }
    }
    for i in 0..n {
        edges[[i, i]] = EdgeType::SameItem.id();
    }

    Ok((
        EncoderInput {
            tokens,
            segments,
            entity_positions,
            relation_positions,
        },
        QuestionGraph { edge_type: edges },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use kbqa_core::dataset::DefaultSegmenter;

    fn sample() -> QuestionRecord {
        let mut r = QuestionRecord::from_gold(
            "1",
            "Stevie Nicks是作曲家吗？",
            "ASK WHERE { wd:Q234691 wdt:P101 wd:Q207628 }",
        )
        .unwrap();
        r.labels.insert("wd:Q207628".parse().unwrap(), "作曲家".into());
        r.labels.insert("wd:Q234691".parse().unwrap(), "Stevie Nicks".into());
        r
    }

    #[test]
    fn layout_length() {
        let r = sample();
        let vocab = InputVocab::from_records(std::slice::from_ref(&r), &DefaultSegmenter);
        let (input, graph) = build_input(&r, &vocab, &DefaultSegmenter).unwrap();
        let q_len = DefaultSegmenter.tokens(&r.question_zh).len();
        assert_eq!(q_len, 8);
        // CLS + question + SEP, then (item, SEP) for two entities and one relation.
        assert_eq!(input.len(), q_len + 2 + 2 * 3);
        assert_eq!(input.entity_positions, vec![10, 12]);
        assert_eq!(input.relation_positions, vec![14]);
        assert_eq!(graph.edge_type.dim(), (input.len(), input.len()));
    }

    #[test]
    fn edge_rules() {
        let r = sample();
        let vocab = InputVocab::from_records(std::slice::from_ref(&r), &DefaultSegmenter);
        let (input, g) = build_input(&r, &vocab, &DefaultSegmenter).unwrap();
        let (e0, e1, r0) = (input.entity_positions[0], input.entity_positions[1], input.relation_positions[0]);
        assert_eq!(g.get(1, 2), EdgeType::QuestionAdjacent.id());
        assert_eq!(g.get(1, e0), EdgeType::QuestionEntityMention.id());
        assert_eq!(g.get(2, e0), EdgeType::QuestionEntityMention.id());
        assert_eq!(g.get(4, e1), EdgeType::QuestionEntityMention.id());
        assert_eq!(g.get(e0, r0), EdgeType::WdtWd.id());
        assert_eq!(g.get(r0, e1), EdgeType::WdtWd.id());
        assert_eq!(g.get(e0, e0), EdgeType::SameItem.id());
        assert_eq!(g.get(0, e0), EdgeType::None.id());
        assert_eq!(g.edge_type, g.edge_type.t());
    }

    #[test]
    fn property_number_edges() {
        let r = QuestionRecord::from_gold(
            "2",
            "问",
            "SELECT ?value1 ?obj WHERE { wd:Q133063 p:P39 ?s . ?s ps:P39 ?obj . ?s pq:P580 ?value1 }",
        )
        .unwrap();
        let vocab = InputVocab::from_records(std::slice::from_ref(&r), &DefaultSegmenter);
        let (input, g) = build_input(&r, &vocab, &DefaultSegmenter).unwrap();
        let rp = &input.relation_positions;
        assert_eq!(g.get(rp[0], rp[1]), EdgeType::WdtP.id());
        assert_eq!(g.get(rp[0], rp[2]), EdgeType::None.id());
        assert_eq!(g.get(input.entity_positions[0], rp[2]), EdgeType::EntityRelationCooccur.id());
    }

    #[test]
    fn empty_candidates_and_determinism() {
        let mut r = sample();
        let vocab = InputVocab::from_records(std::slice::from_ref(&r), &DefaultSegmenter);
        assert_eq!(
            build_input(&r, &vocab, &DefaultSegmenter).unwrap(),
            build_input(&r, &vocab, &DefaultSegmenter).unwrap()
        );
        r.relation_candidates.clear();
        assert!(matches!(build_input(&r, &vocab, &DefaultSegmenter), Err(InputError::EmptyCandidates(_))));
    }
}
