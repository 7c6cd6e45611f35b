//! Decoding whole corpora and scoring the decoded queries by execution.

use kbqa_core::dataset::QuestionRecord;
use kbqa_core::kg::KnowledgeGraph;
use kbqa_core::metrics::{corpus_scores, CorpusReport, EvalRecord, MetricError};
use serde::Serialize;

use crate::model::Model;

/// Decoder output for one record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub id: String,
    /// Query text, absent when the record could not be laid out.
    pub sparql: Option<String>,
    pub truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Greedy predictions for every record, in input order.
pub fn predict_records(model: &Model, records: &[QuestionRecord]) -> Vec<Prediction> {
    records
        .iter()
        .map(|r| {
            let decoded = model
                .input_only(r)
                .and_then(|ex| model.decode_greedy(&ex, model.config.max_decode_len));
            match decoded {
                Ok(d) => Prediction {
                    id: r.id.clone(),
                    sparql: Some(d.text),
                    truncated: d.truncated,
                    error: None,
                },
                Err(e) => Prediction {
                    id: r.id.clone(),
                    sparql: None,
                    truncated: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Decodes, executes and scores every record against its gold query.
pub fn evaluate(model: &Model, records: &[QuestionRecord], kg: &KnowledgeGraph) -> Result<CorpusReport, MetricError> {
    let preds = predict_records(model, records);
    let eval: Vec<EvalRecord> = records
        .iter()
        .zip(preds)
        .map(|(r, p)| EvalRecord {
            id: r.id.clone(),
            pred: p.sparql,
            gold: r.gold.clone(),
        })
        .collect();
    corpus_scores(&eval, kg)
}
