//! Seeded synthetic corpora with known author structure.
//!
//! Each author draws a type from a mixture; the type fixes the author's
//! sarcasm propensity. Comment text is filler tokens. With the interaction
//! flag set, a cue token is added whose meaning depends on the author's type:
//! for even types it appears exactly on sarcastic comments, for odd types
//! exactly on non-sarcastic ones.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::CommentRecord;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_authors: usize,
    pub comments_per_author: usize,
    /// Sarcasm propensity of each author type.
    pub propensities: Vec<f64>,
    /// Mixture weights over author types; must sum to 1.
    pub weights: Vec<f64>,
    pub filler_vocab: Vec<String>,
    pub cue_token: String,
    pub interaction: bool,
    /// Inclusive range of filler tokens per comment.
    pub filler_len: (usize, usize),
    pub seed: u64,
}

pub fn default_filler(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i:02}")).collect()
}

impl SyntheticSpec {
    /// Two equally likely author types with propensities 0.1 and 0.9, no cue.
    pub fn propensity(n_authors: usize, comments_per_author: usize, seed: u64) -> Self {
        SyntheticSpec {
            n_authors,
            comments_per_author,
            propensities: vec![0.1, 0.9],
            weights: vec![0.5, 0.5],
            filler_vocab: default_filler(20),
            cue_token: "cue".into(),
            interaction: false,
            filler_len: (3, 5),
            seed,
        }
    }

    /// Two equally likely author types, both with propensity 0.5, whose cue
    /// token polarity is opposite.
    pub fn interaction(n_authors: usize, comments_per_author: usize, seed: u64) -> Self {
        SyntheticSpec {
            propensities: vec![0.5, 0.5],
            interaction: true,
            ..Self::propensity(n_authors, comments_per_author, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.propensities.is_empty() || self.propensities.len() != self.weights.len() {
            return Err(Error::Config("need one mixture weight per propensity".into()));
        }
        if self.propensities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("propensities must lie in [0, 1]".into()));
        }
        if self.weights.iter().any(|w| w.is_nan() || *w < 0.0) || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config("mixture weights must be nonnegative and sum to 1".into()));
        }
        if self.filler_vocab.is_empty() {
            return Err(Error::Config("filler vocabulary is empty".into()));
        }
        if self.filler_vocab.contains(&self.cue_token) {
            return Err(Error::Config("cue token must not be a filler token".into()));
        }
        let (lo, hi) = self.filler_len;
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!("filler length range ({lo}, {hi}) is invalid")));
        }
        Ok(())
    }

    pub fn vocabulary(&self) -> Vec<String> {
        let mut v = self.filler_vocab.clone();
        v.push(self.cue_token.clone());
        v
    }
}

/// Generated records plus the ground truth behind them.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub records: Vec<CommentRecord>,
    pub author_types: BTreeMap<String, usize>,
}

impl SyntheticCorpus {
    pub fn propensity_of(&self, spec: &SyntheticSpec, author: &str) -> Option<f64> {
        self.author_types.get(author).map(|&k| spec.propensities[k])
    }
}

pub fn generate_synthetic_detailed(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let types = WeightedIndex::new(&spec.weights).map_err(|e| Error::Config(e.to_string()))?;
    let mut records = Vec::with_capacity(spec.n_authors * spec.comments_per_author);
    let mut author_types = BTreeMap::new();

    for a in 0..spec.n_authors {
        let author = format!("author{a:05}");
        let kind = types.sample(&mut rng);
        let propensity = spec.propensities[kind];
        author_types.insert(author.clone(), kind);

        for j in 0..spec.comments_per_author {
            let label = u8::from(rng.gen::<f64>() < propensity);
            let n = rng.gen_range(spec.filler_len.0..=spec.filler_len.1);
            let mut tokens: Vec<&str> = (0..n)
                .map(|_| spec.filler_vocab[rng.gen_range(0..spec.filler_vocab.len())].as_str())
                .collect();
            if spec.interaction && ((label == 1) == (kind % 2 == 0)) {
                let at = rng.gen_range(0..=tokens.len());
                tokens.insert(at, &spec.cue_token);
            }
            records.push(CommentRecord {
                id: format!("{author}-{j:04}"),
                text: tokens.join(" "),
                author: author.clone(),
                subreddit: "synthetic".into(),
                label,
                pair_id: None,
            });
        }
    }
    Ok(SyntheticCorpus { records, author_types })
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<CommentRecord>> {
    Ok(generate_synthetic_detailed(spec)?.records)
}
