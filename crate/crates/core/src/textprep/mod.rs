//! Comment tokenization and word-vector lookup.

mod tokenize;
mod vectors;

pub use tokenize::{tokenize, TokenizerRules};
pub use vectors::{encode_comment, load_vectors, WordVectorTable, UNK_RANGE};
