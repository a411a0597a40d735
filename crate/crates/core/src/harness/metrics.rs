use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts with sarcastic as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

impl ConfusionCounts {
    pub fn from_labels(predictions: &[u8], golds: &[u8]) -> Result<Self> {
        if predictions.len() != golds.len() {
            return Err(Error::dim("prediction count", golds.len(), predictions.len()));
        }
        let mut c = ConfusionCounts::default();
        for (&p, &g) in predictions.iter().zip(golds) {
            match (p == 1, g == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn f1_positive(&self) -> f64 {
        f1(self.tp, self.fp, self.fn_)
    }

    /// F1 with the roles of the classes swapped.
    pub fn f1_negative(&self) -> f64 {
        f1(self.tn, self.fn_, self.fp)
    }

    pub fn macro_f1(&self) -> f64 {
        (self.f1_positive() + self.f1_negative()) / 2.0
    }
}

/// Unweighted mean of the two per-class F1 scores. A class with zero
/// precision+recall denominator scores 0.
pub fn macro_f1(predictions: &[u8], golds: &[u8]) -> Result<f64> {
    if golds.is_empty() {
        return Err(Error::EmptyInput("label sequence"));
    }
    Ok(ConfusionCounts::from_labels(predictions, golds)?.macro_f1())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub resamples: usize,
}

pub const DEFAULT_RESAMPLES: usize = 10_000;

/// Linear interpolation between closest ranks of a sorted sample.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap interval of the mean of `scores`.
pub fn bootstrap_ci(scores: &[f64], resamples: usize, level: f64, seed: u64) -> Result<BootstrapCI> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("score list"));
    }
    if resamples == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("confidence level {level} must lie in (0, 1)")));
    }
    let n = scores.len();
    let mean = scores.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| scores[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    // Clamp absorbs last-bit differences between summation orders.
    let lower = percentile(&means, tail).min(mean);
    let upper = percentile(&means, 1.0 - tail).max(mean);
    Ok(BootstrapCI {
        mean,
        lower,
        upper,
        level,
        resamples,
    })
}
