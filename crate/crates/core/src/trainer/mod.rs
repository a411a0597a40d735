//! Minibatch training with early stopping on a holdout split.
//!
//! The objective is mean binary cross-entropy plus `l2_lambda` times the sum
//! of squared entries of the head weight matrices. GRU weights, biases and
//! author vectors carry no penalty. Parameters are updated with Adam, and
//! the parameters with the lowest holdout loss seen so far are kept.

mod rare;
mod search;

pub use rare::remap_rare_authors;
pub use search::{random_search, sample_config, HyperRange, SearchResult};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorStatsTable, CommentRecord};
use crate::error::{Error, Result};
use crate::harness::ConfusionCounts;
use crate::model::{init_model, predict, ModelConfig, ModelParams, Variant};
use crate::numerics::{adam_step, bce_logit_grad, bce_loss, AdamConfig, AdamState, Mode, Parameters};
use crate::textprep::{encode_comment, WordVectorTable};

pub const DEFAULT_RARE_THRESHOLD: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Consecutive non-improving holdout evaluations tolerated before stopping.
    pub patience: usize,
    pub l2_lambda: f64,
    pub seed: u64,
    /// When set, training authors with fewer comments than this share the UNK vector.
    pub rare_author_threshold: Option<usize>,
    /// Fraction of the training data held out for early stopping.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch_size: 32,
            max_epochs: 50,
            patience: 5,
            l2_lambda: 1e-4,
            seed: 0,
            rare_author_threshold: None,
            holdout_fraction: 0.05,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size and max_epochs must be positive".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::Config(format!(
                "l2_lambda {} must be nonnegative",
                self.l2_lambda
            )));
        }
        if self.rare_author_threshold == Some(0) {
            return Err(Error::Config("rare author threshold must be positive".into()));
        }
        Ok(())
    }
}

/// A comment ready for the model: one word vector per token.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub encoded: Vec<Vec<f64>>,
    pub author: String,
    pub label: u8,
}

pub fn encode_records(records: &[CommentRecord], vectors: &WordVectorTable) -> Result<Vec<Example>> {
    records
        .iter()
        .map(|r| {
            Ok(Example {
                encoded: encode_comment(&r.text, vectors)?,
                author: r.author.clone(),
                label: r.label,
            })
        })
        .collect()
}

fn mean_bce(params: &ModelParams, examples: &[Example], stats: &AuthorStatsTable) -> Result<f64> {
    let losses = examples
        .par_iter()
        .map(|ex| {
            let feature = params.author_feature(&ex.author, stats);
            Ok(bce_loss(params.predict_proba(&ex.encoded, &feature)?, ex.label))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / examples.len() as f64)
}

/// Eval-mode objective: mean BCE plus the head-weight L2 penalty.
pub fn batch_loss(params: &ModelParams, batch: &[Example], stats: &AuthorStatsTable, l2_lambda: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    Ok(mean_bce(params, batch, stats)? + l2_lambda * params.head_weight_sq_norm())
}

/// Adds the objective's gradient on `batch` to the parameter gradient
/// buffers and returns the objective value.
pub fn accumulate_gradients(
    params: &mut ModelParams,
    batch: &[&Example],
    stats: &AuthorStatsTable,
    l2_lambda: f64,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for ex in batch {
        let feature = params.author_feature(&ex.author, stats);
        let trace = params.forward_trace(&ex.encoded, &feature, mode, rng)?;
        loss += bce_loss(trace.probability(), ex.label);
        let d_logit = bce_logit_grad(trace.logit, ex.label) * scale;
        params.backward(&trace, &ex.encoded, &feature, d_logit);
    }
    if l2_lambda > 0.0 {
        for layer in &mut params.head {
            layer.weight.add_values_to_grad(2.0 * l2_lambda);
        }
    }
    Ok(loss * scale + l2_lambda * params.head_weight_sq_norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub stopped_epoch: usize,
    pub best_epoch: Option<usize>,
    pub best_holdout_loss: Option<f64>,
}

impl TrainHistory {
    /// The per-epoch records as a JSON array.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.epochs)?)
    }
}

/// Patience counter over a sequence of holdout losses.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<f64>,
    stale: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            stale: 0,
        }
    }

    pub fn observe(&mut self, loss: f64) -> StopDecision {
        if self.best.is_none_or(|b| loss < b) {
            self.best = Some(loss);
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: TrainHistory,
}

/// Trains a fresh model on `train_set`, early-stopping on `holdout_set`.
///
/// `stats` must come from `train_set`. With an empty holdout set no early
/// stopping happens and the final parameters are returned.
pub fn train(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    train_set: &[CommentRecord],
    holdout_set: &[CommentRecord],
    stats: &AuthorStatsTable,
    vectors: &WordVectorTable,
) -> Result<TrainOutcome> {
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    model_config.validate()?;
    train_config.validate()?;
    if model_config.embedding_dim != vectors.dim() {
        return Err(Error::dim(
            "word vector dimension",
            model_config.embedding_dim,
            vectors.dim(),
        ));
    }

    let rare = match (model_config.variant, train_config.rare_author_threshold) {
        (Variant::AuthorEmbed, Some(t)) => Some(t),
        _ => None,
    };
    let remapped;
    let train_records = match rare {
        Some(t) => {
            remapped = remap_rare_authors(train_set, stats, Some(t));
            &remapped[..]
        }
        None => train_set,
    };
    let authors: Vec<&str> = stats
        .iter()
        .filter(|(_, c)| rare.is_none_or(|t| c.total() >= t as u64))
        .map(|(a, _)| a)
        .collect();

    let train_examples = encode_records(train_records, vectors)?;
    let holdout_examples = encode_records(holdout_set, vectors)?;

    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let mut params = init_model(model_config, authors, &mut rng)?;
    let hyper = AdamConfig::with_lr(train_config.lr);
    let mut states: Vec<AdamState> = params.tensors().iter().map(|t| AdamState::new(t.len())).collect();

    let mut history = TrainHistory::default();
    let mut stopper = EarlyStopping::new(train_config.patience);
    let mut best_params: Option<ModelParams> = None;
    let mut order: Vec<usize> = (0..train_examples.len()).collect();

    for epoch in 1..=train_config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(train_config.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_examples[i]).collect();
            params.zero_grad();
            let loss = accumulate_gradients(
                &mut params,
                &batch,
                stats,
                train_config.l2_lambda,
                Mode::Train,
                &mut rng,
            )?;
            total += loss * batch.len() as f64;
            for (t, state) in params.tensors_mut().into_iter().zip(&mut states) {
                let (values, grad) = t.split_grad_mut();
                adam_step(values, grad, state, &hyper)?;
            }
        }
        let train_loss = total / train_examples.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Config(format!("training diverged at epoch {epoch}")));
        }

        let holdout_loss = if holdout_examples.is_empty() {
            None
        } else {
            Some(mean_bce(&params, &holdout_examples, stats)?)
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            holdout_loss,
        });
        history.stopped_epoch = epoch;

        if let Some(loss) = holdout_loss {
            match stopper.observe(loss) {
                StopDecision::Improved => {
                    best_params = Some(params.clone());
                    history.best_epoch = Some(epoch);
                    history.best_holdout_loss = Some(loss);
                }
                StopDecision::Continue => {}
                StopDecision::Stop => break,
            }
        }
    }

    let mut params = best_params.unwrap_or(params);
    params.zero_grad();
    Ok(TrainOutcome { params, history })
}

/// Eval-mode outputs of a model over a labeled set.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub probabilities: Vec<f64>,
    pub predictions: Vec<u8>,
    pub confusion: ConfusionCounts,
    pub mean_loss: f64,
}

impl Evaluation {
    pub fn macro_f1(&self) -> f64 {
        self.confusion.macro_f1()
    }

    pub fn accuracy(&self) -> f64 {
        (self.confusion.tp + self.confusion.tn) as f64 / self.confusion.total() as f64
    }
}

pub fn evaluate(params: &ModelParams, stats: &AuthorStatsTable, examples: &[Example]) -> Result<Evaluation> {
    if examples.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let probabilities = examples
        .par_iter()
        .map(|ex| params.predict_proba(&ex.encoded, &params.author_feature(&ex.author, stats)))
        .collect::<Result<Vec<f64>>>()?;
    let predictions: Vec<u8> = probabilities.iter().map(|&p| predict(p, 0.5)).collect();
    let golds: Vec<u8> = examples.iter().map(|e| e.label).collect();
    let mean_loss = probabilities
        .iter()
        .zip(&golds)
        .map(|(&p, &y)| bce_loss(p, y))
        .sum::<f64>()
        / golds.len() as f64;
    Ok(Evaluation {
        confusion: ConfusionCounts::from_labels(&predictions, &golds)?,
        probabilities,
        predictions,
        mean_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{author_stats, generate_synthetic, SyntheticSpec};
    use crate::numerics::{LinearParams, Tensor};

    fn small_model(variant: Variant) -> ModelConfig {
        ModelConfig {
            variant,
            embedding_dim: 4,
            hidden: 3,
            author_dim: 15,
            head_layers: 2,
            head_hidden: 2,
            dropout: 0.0,
            count_transform: crate::model::CountTransform::Log1p,
        }
    }

    fn data() -> (Vec<CommentRecord>, WordVectorTable) {
        let spec = SyntheticSpec::propensity(6, 5, 1);
        let vectors = WordVectorTable::random(&spec.vocabulary(), 4, 1.0, 2).unwrap();
        (generate_synthetic(&spec).unwrap(), vectors)
    }

    #[test]
    fn penalty_only_covers_head_weights() {
        let (recs, vectors) = data();
        let stats = author_stats(&recs);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = init_model(&small_model(Variant::BayesPrior), [], &mut rng).unwrap();
        let batch = encode_records(&recs[..4], &vectors).unwrap();
        let plain = batch_loss(&params, &batch, &stats, 0.0).unwrap();
        let penalized = batch_loss(&params, &batch, &stats, 0.1).unwrap();
        assert!((penalized - plain - 0.1 * params.head_weight_sq_norm()).abs() < 1e-12);

        // Biases, GRU weights: untouched by the penalty.
        params.fwd.w_z.values_mut()[0] += 10.0;
        params.head[0].bias.values_mut()[0] += 10.0;
        let a = batch_loss(&params, &batch, &stats, 0.1).unwrap() - batch_loss(&params, &batch, &stats, 0.0).unwrap();
        assert!((a - 0.1 * params.head_weight_sq_norm()).abs() < 1e-12);

        for l in &mut params.head {
            *l = LinearParams::new(Tensor::zeros(l.weight.shape()), l.bias.clone()).unwrap();
        }
        assert_eq!(params.head_weight_sq_norm(), 0.0);
        assert_eq!(
            batch_loss(&params, &batch, &stats, 5.0).unwrap(),
            batch_loss(&params, &batch, &stats, 0.0).unwrap()
        );
    }

    #[test]
    fn hand_worked_penalty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut params = init_model(
            &ModelConfig {
                head_layers: 1,
                ..small_model(Variant::NoAuthor)
            },
            [],
            &mut rng,
        )
        .unwrap();
        params.head[0] = LinearParams::new(
            Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            Tensor::zeros(&[2]),
        )
        .unwrap();
        assert!((0.1 * params.head_weight_sq_norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = init_model(&small_model(Variant::NoAuthor), [], &mut rng).unwrap();
        assert!(matches!(
            batch_loss(&params, &[], &AuthorStatsTable::default(), 0.0),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn early_stopping_counts_patience() {
        let mut s = EarlyStopping::new(2);
        assert_eq!(s.observe(1.0), StopDecision::Improved);
        assert_eq!(s.observe(1.0), StopDecision::Continue);
        assert_eq!(s.observe(0.9), StopDecision::Improved);
        assert_eq!(s.observe(0.95), StopDecision::Continue);
        assert_eq!(s.observe(0.91), StopDecision::Stop);
        assert_eq!(s.best(), Some(0.9));

        let mut s = EarlyStopping::new(1);
        for i in 0..100 {
            assert_eq!(s.observe(10.0 - i as f64 * 0.01), StopDecision::Improved);
        }
    }

    #[test]
    fn train_is_deterministic_and_keeps_best() {
        let (recs, vectors) = data();
        let (train_set, holdout) = crate::corpus::split_holdout(&recs, 0.2, 4).unwrap();
        let stats = author_stats(&train_set);
        let cfg = TrainConfig {
            lr: 0.05,
            batch_size: 4,
            max_epochs: 8,
            patience: 2,
            ..TrainConfig::default()
        };
        for variant in Variant::ALL {
            let mc = ModelConfig {
                dropout: 0.2,
                ..small_model(variant)
            };
            let a = train(&mc, &cfg, &train_set, &holdout, &stats, &vectors).unwrap();
            let b = train(&mc, &cfg, &train_set, &holdout, &stats, &vectors).unwrap();
            assert_eq!(a.history, b.history);
            assert_eq!(a.params, b.params);

            let losses: Vec<f64> = a.history.epochs.iter().filter_map(|e| e.holdout_loss).collect();
            let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(a.history.best_holdout_loss, Some(min));
            let ex = encode_records(&holdout, &vectors).unwrap();
            assert_eq!(mean_bce(&a.params, &ex, &stats).unwrap(), min);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (recs, vectors) = data();
        let stats = author_stats(&recs);
        let mc = small_model(Variant::NoAuthor);
        let cfg = TrainConfig::default();
        assert!(matches!(
            train(&mc, &cfg, &[], &[], &stats, &vectors),
            Err(Error::EmptyInput(_))
        ));
        let bad = TrainConfig {
            patience: 0,
            ..cfg.clone()
        };
        assert!(train(&mc, &bad, &recs, &[], &stats, &vectors).is_err());
        let wrong_dim = ModelConfig { embedding_dim: 5, ..mc };
        assert!(train(&wrong_dim, &cfg, &recs, &[], &stats, &vectors).is_err());
    }
}
