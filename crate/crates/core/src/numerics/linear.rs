use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{xavier_uniform, Tensor};
use crate::error::{Error, Result};

/// Fully-connected layer `y = W x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LinearParams {
    pub fn new(weight: Tensor, bias: Tensor) -> Result<Self> {
        if weight.shape().len() != 2 {
            return Err(Error::Config("linear weight must be a matrix".into()));
        }
        if bias.len() != weight.rows() {
            return Err(Error::dim("linear bias", weight.rows(), bias.len()));
        }
        Ok(LinearParams { weight, bias })
    }

    pub fn xavier<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        LinearParams {
            weight: xavier_uniform(output, input, rng),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        LinearParams {
            weight: Tensor::zeros(&[output, input]),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Accumulates parameter gradients for upstream `dy` at input `x` and
    /// returns the gradient with respect to `x`.
    pub fn backward(&mut self, x: &[f64], dy: &[f64]) -> Vec<f64> {
        self.weight.outer_acc_grad(dy, x);
        self.bias.add_grad(dy);
        let mut dx = vec![0.0; x.len()];
        self.weight.matvec_t_acc(dy, &mut dx);
        dx
    }
}

pub fn linear(x: &[f64], p: &LinearParams) -> Result<Vec<f64>> {
    if x.len() != p.input_dim() {
        return Err(Error::dim("linear input", p.input_dim(), x.len()));
    }
    let mut y = p.weight.matvec(x);
    for (v, b) in y.iter_mut().zip(p.bias.values()) {
        *v += b;
    }
    Ok(y)
}
