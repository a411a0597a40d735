//! Differentiable kernels for the recurrent encoder and the classifier head.
//!
//! Gradients are hand-written per layer: each forward kernel has a traced
//! variant that records what the matching backward pass needs, and the
//! backward pass accumulates into the `grad` buffer of each parameter
//! [`Tensor`]. [`grad_check`] validates all of it against central finite
//! differences.

mod adam;
mod gradcheck;
mod gru;
mod linear;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, grad_check_with_floor, GradCheckReport, Parameters, GRAD_CHECK_FLOOR};
pub use gru::{bigru_encode, gru_cell, BiGruTrace, GruParams, GruStep};
pub use linear::{linear, LinearParams};
pub use tensor::{xavier_uniform, Tensor};

use rand::Rng;

use crate::error::{Error, Result};

/// Lower clamp applied to probabilities before taking logs.
pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Logistic function, stable for large negative inputs.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_tensor(x: &Tensor) -> Tensor {
    x.map(sigmoid)
}

#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Binary cross-entropy of a single probability against a 0/1 label.
pub fn bce_loss(p: f64, label: u8) -> f64 {
    let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Derivative of `bce_loss(sigmoid(logit), label)` with respect to the logit.
///
/// Zero while the clamp is active, matching the clamped forward function.
pub fn bce_logit_grad(logit: f64, label: u8) -> f64 {
    let p = sigmoid(logit);
    if !(BCE_CLAMP..=1.0 - BCE_CLAMP).contains(&p) {
        return 0.0;
    }
    p - f64::from(label)
}

/// Per-entry multipliers of one inverted-dropout draw.
#[derive(Clone, Debug)]
pub struct DropoutMask {
    scale: Vec<f64>,
}

impl DropoutMask {
    pub fn sample<R: Rng + ?Sized>(len: usize, rate: f64, mode: Mode, rng: &mut R) -> Result<Self> {
        check_rate(rate)?;
        let scale = if mode == Mode::Eval || rate == 0.0 {
            vec![1.0; len]
        } else {
            let keep = 1.0 / (1.0 - rate);
            (0..len)
                .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
                .collect()
        };
        Ok(DropoutMask { scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.scale).map(|(a, s)| a * s).collect()
    }

    /// Backward pass is the same elementwise product.
    pub fn backward(&self, dy: &[f64]) -> Vec<f64> {
        self.apply(dy)
    }
}

pub(crate) fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} must lie in [0, 1)")));
    }
    Ok(())
}

/// Inverted dropout: identity in eval mode, zero-and-rescale in train mode.
pub fn dropout<R: Rng + ?Sized>(x: &Tensor, rate: f64, mode: Mode, rng: &mut R) -> Result<Tensor> {
    let mask = DropoutMask::sample(x.len(), rate, mode, rng)?;
    Tensor::from_vec(x.shape().to_vec(), mask.apply(x.values()))
}
