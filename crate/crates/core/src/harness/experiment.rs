use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{bootstrap_ci, BootstrapCI, DEFAULT_RESAMPLES};
use crate::corpus::{author_stats, split_holdout, CommentRecord};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::textprep::WordVectorTable;
use crate::trainer::{encode_records, evaluate, train, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub macro_f1: f64,
    /// F1 of the sarcastic and non-sarcastic classes.
    pub f1_pair: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiRunReport {
    pub runs: Vec<RunResult>,
    pub ci: BootstrapCI,
}

/// One independent run: holdout split, author stats, training and test
/// evaluation, all derived from `seed`.
pub fn single_run(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    train_records: &[CommentRecord],
    test_records: &[CommentRecord],
    vectors: &WordVectorTable,
    seed: u64,
) -> Result<RunResult> {
    let (train_set, holdout) = split_holdout(train_records, train_config.holdout_fraction, seed)?;
    let stats = author_stats(&train_set).with_source("train");
    let cfg = TrainConfig {
        seed,
        ..train_config.clone()
    };
    let outcome = train(model_config, &cfg, &train_set, &holdout, &stats, vectors)?;
    let eval = evaluate(&outcome.params, &stats, &encode_records(test_records, vectors)?)?;
    Ok(RunResult {
        seed,
        macro_f1: eval.macro_f1(),
        f1_pair: (eval.confusion.f1_positive(), eval.confusion.f1_negative()),
    })
}

/// Runs seeds `seed0 .. seed0 + k` and summarizes them with a 95% bootstrap
/// interval. The result depends only on the arguments, not on thread count.
pub fn multi_run(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    train_records: &[CommentRecord],
    test_records: &[CommentRecord],
    vectors: &WordVectorTable,
    k: usize,
    seed0: u64,
) -> Result<MultiRunReport> {
    if k == 0 {
        return Err(Error::Config("run count must be at least 1".into()));
    }
    if test_records.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    let runs = (0..k as u64)
        .into_par_iter()
        .map(|i| {
            single_run(
                model_config,
                train_config,
                train_records,
                test_records,
                vectors,
                seed0.wrapping_add(i),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = runs.iter().map(|r| r.macro_f1).collect();
    let ci = bootstrap_ci(&scores, DEFAULT_RESAMPLES, 0.95, seed0)?;
    Ok(MultiRunReport { runs, ci })
}
