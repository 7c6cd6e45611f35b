//! Question/query corpora: loading, question-type classification,
//! corpus statistics and seeded splits.

mod classify;
mod corpus;
mod segment;
mod split;
mod stats;

pub use classify::{classify_question_type, QuestionType};
pub use corpus::{load_corpus, parse_corpus, CorpusError, LoadedCorpus, QuestionRecord, SkippedRecord};
pub use segment::{is_cjk, DefaultSegmenter, Segmenter};
pub use split::{split_corpus, Split, SplitError};
pub use stats::{corpus_stats, corpus_stats_with, CorpusStats, StatsError};
