//! Text-to-SPARQL toolkit over a Wikidata query subset: parsing and
//! validation, an in-memory executor, evaluation metrics and corpus tooling.

pub mod dataset;
pub mod kg;
pub mod metrics;
pub mod sparql;
