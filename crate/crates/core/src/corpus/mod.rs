//! Comment records, author statistics, holdout splits and synthetic corpora.

mod record;
pub mod sarc;
mod split;
mod stats;
mod synthetic;

pub use record::{load_jsonl, write_jsonl, CommentRecord};
pub use split::split_holdout;
pub use stats::{author_stats, corpus_stats, AuthorCounts, AuthorStatsTable, CorpusStats};
pub use synthetic::{default_filler, generate_synthetic, generate_synthetic_detailed, SyntheticCorpus, SyntheticSpec};
