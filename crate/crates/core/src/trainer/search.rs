use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{encode_records, evaluate, train, TrainConfig};
use crate::corpus::{author_stats, split_holdout, CommentRecord};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::textprep::WordVectorTable;

/// Sampling ranges. `lr` and `l2_lambda` are log-uniform, `dropout` uniform,
/// the rest categorical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperRange {
    pub lr: (f64, f64),
    pub l2_lambda: (f64, f64),
    pub dropout: (f64, f64),
    pub hidden: Vec<usize>,
    pub head_layers: Vec<usize>,
    pub head_hidden: Vec<usize>,
    pub batch_size: Vec<usize>,
}

impl Default for HyperRange {
    fn default() -> Self {
        HyperRange {
            lr: (1e-4, 1e-2),
            l2_lambda: (1e-6, 1e-2),
            dropout: (0.0, 0.6),
            hidden: vec![50, 100, 200],
            head_layers: vec![1, 2],
            head_hidden: vec![32, 64, 128],
            batch_size: vec![16, 32, 64],
        }
    }
}

fn check_log_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if lo == hi && lo >= 0.0 {
        return Ok(());
    }
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::Config(format!(
            "{name} range ({lo}, {hi}) must satisfy 0 < lo < hi"
        )));
    }
    Ok(())
}

impl HyperRange {
    pub fn validate(&self) -> Result<()> {
        check_log_range("lr", self.lr)?;
        if self.lr.0 == 0.0 {
            return Err(Error::Config("lr range must be positive".into()));
        }
        check_log_range("l2_lambda", self.l2_lambda)?;
        let (lo, hi) = self.dropout;
        if !(0.0 <= lo && lo <= hi && hi < 1.0) {
            return Err(Error::Config(format!("dropout range ({lo}, {hi}) must lie in [0, 1)")));
        }
        for (name, v) in [
            ("hidden", &self.hidden),
            ("head_layers", &self.head_layers),
            ("head_hidden", &self.head_hidden),
            ("batch_size", &self.batch_size),
        ] {
            if v.is_empty() || v.contains(&0) {
                return Err(Error::Config(format!("{name} choices must be non-empty and positive")));
            }
        }
        if self.head_layers.iter().any(|&l| l > 2) {
            return Err(Error::Config("head_layers choices must be 1 or 2".into()));
        }
        Ok(())
    }

    pub fn contains(&self, model: &ModelConfig, train: &TrainConfig) -> bool {
        let within = |(lo, hi): (f64, f64), v: f64| lo <= v && v <= hi;
        within(self.lr, train.lr)
            && within(self.l2_lambda, train.l2_lambda)
            && within(self.dropout, model.dropout)
            && self.hidden.contains(&model.hidden)
            && self.head_layers.contains(&model.head_layers)
            && self.head_hidden.contains(&model.head_hidden)
            && self.batch_size.contains(&train.batch_size)
    }
}

fn log_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.gen_range(lo.ln()..hi.ln()).exp().clamp(lo, hi)
}

/// Draws one configuration, overriding the searched fields of the bases.
pub fn sample_config<R: Rng>(
    ranges: &HyperRange,
    base_model: &ModelConfig,
    base_train: &TrainConfig,
    rng: &mut R,
) -> (ModelConfig, TrainConfig) {
    let model = ModelConfig {
        hidden: *ranges.hidden.choose(rng).expect("validated"),
        head_layers: *ranges.head_layers.choose(rng).expect("validated"),
        head_hidden: *ranges.head_hidden.choose(rng).expect("validated"),
        dropout: if ranges.dropout.0 == ranges.dropout.1 {
            ranges.dropout.0
        } else {
            rng.gen_range(ranges.dropout.0..ranges.dropout.1)
        },
        ..base_model.clone()
    };
    let train = TrainConfig {
        lr: log_uniform(rng, ranges.lr),
        l2_lambda: log_uniform(rng, ranges.l2_lambda),
        batch_size: *ranges.batch_size.choose(rng).expect("validated"),
        seed: rng.gen(),
        ..base_train.clone()
    };
    (model, train)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Position in sampling order.
    pub trial: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub holdout_macro_f1: f64,
    pub stopped_epoch: usize,
}

/// Trains `budget` sampled configurations and ranks them by macro-F1 on a
/// tuning split, best first.
///
/// `records` are split into a tuning holdout and a remainder; the remainder
/// is split again into training data and the early-stopping holdout. Both
/// splits use `base_train.holdout_fraction`.
pub fn random_search(
    ranges: &HyperRange,
    budget: usize,
    base_model: &ModelConfig,
    base_train: &TrainConfig,
    records: &[CommentRecord],
    vectors: &WordVectorTable,
    seed: u64,
) -> Result<Vec<SearchResult>> {
    if budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    ranges.validate()?;
    let (rest, tuning) = split_holdout(records, base_train.holdout_fraction, seed)?;
    let (train_set, early_stop) = split_holdout(&rest, base_train.holdout_fraction, seed.wrapping_add(1))?;
    if tuning.is_empty() || train_set.is_empty() {
        return Err(Error::EmptyInput("search split"));
    }
    let stats = author_stats(&train_set);
    let tuning_examples = encode_records(&tuning, vectors)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials: Vec<(ModelConfig, TrainConfig)> = (0..budget)
        .map(|_| sample_config(ranges, base_model, base_train, &mut rng))
        .collect();

    let mut results = trials
        .into_par_iter()
        .enumerate()
        .map(|(trial, (model, train_cfg))| {
            let outcome = train(&model, &train_cfg, &train_set, &early_stop, &stats, vectors)?;
            let eval = evaluate(&outcome.params, &stats, &tuning_examples)?;
            Ok(SearchResult {
                trial,
                model,
                train: train_cfg,
                holdout_macro_f1: eval.macro_f1(),
                stopped_epoch: outcome.history.stopped_epoch,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| {
        b.holdout_macro_f1
            .total_cmp(&a.holdout_macro_f1)
            .then(a.trial.cmp(&b.trial))
    });
    Ok(results)
}
