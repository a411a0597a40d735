use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::CommentRecord;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorCounts {
    pub sarcastic: u64,
    pub not_sarcastic: u64,
}

impl AuthorCounts {
    pub fn total(&self) -> u64 {
        self.sarcastic + self.not_sarcastic
    }
}

/// Per-author label counts of one split. Absent authors read as (0, 0).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorStatsTable {
    counts: BTreeMap<String, AuthorCounts>,
    built_from: String,
}

impl AuthorStatsTable {
    pub fn get(&self, author: &str) -> AuthorCounts {
        self.counts.get(author).copied().unwrap_or_default()
    }

    pub fn contains(&self, author: &str) -> bool {
        self.counts.contains_key(author)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn authors(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, AuthorCounts)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Sum of all counts; equals the size of the source split.
    pub fn total(&self) -> u64 {
        self.counts.values().map(AuthorCounts::total).sum()
    }

    pub fn built_from(&self) -> &str {
        &self.built_from
    }

    pub fn with_source(mut self, split: impl Into<String>) -> Self {
        self.built_from = split.into();
        self
    }
}

/// Counts label-1 and label-0 comments per author. Pass the training split only.
pub fn author_stats(train: &[CommentRecord]) -> AuthorStatsTable {
    let mut counts: BTreeMap<String, AuthorCounts> = BTreeMap::new();
    for r in train {
        let c = counts.entry(r.author.clone()).or_default();
        if r.is_sarcastic() {
            c.sarcastic += 1;
        } else {
            c.not_sarcastic += 1;
        }
    }
    AuthorStatsTable {
        counts,
        built_from: "train".into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub count: usize,
    pub percent_sarcastic: f64,
}

pub fn corpus_stats(records: &[CommentRecord]) -> Result<CorpusStats> {
    if records.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let sarcastic = records.iter().filter(|r| r.is_sarcastic()).count();
    Ok(CorpusStats {
        count: records.len(),
        percent_sarcastic: 100.0 * sarcastic as f64 / records.len() as f64,
    })
}
