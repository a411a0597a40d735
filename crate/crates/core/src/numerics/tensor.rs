use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major buffer of `f64` with an optional gradient of equal length.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    #[serde(skip)]
    grad: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<RawTensor> for Tensor {
    type Error = Error;

    fn try_from(raw: RawTensor) -> Result<Self> {
        Tensor::from_vec(raw.shape, raw.values)
    }
}

impl PartialEq for Tensor {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.values == other.values
    }
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            values: vec![0.0; len],
            grad: None,
        }
    }

    pub fn from_vec(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Config(format!("tensor shape {shape:?} has a zero dimension")));
        }
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(Error::dim("tensor buffer", expected, values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("tensor contains a non-finite value".into()));
        }
        Ok(Tensor {
            shape,
            values,
            grad: None,
        })
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Tensor {
            shape: vec![values.len()],
            values,
            grad: None,
        }
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::from_vec(vec![rows, cols], values)
    }

    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], limit: f64, rng: &mut R) -> Self {
        let mut t = Tensor::zeros(shape);
        for v in &mut t.values {
            *v = rng.gen_range(-limit..limit);
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Column count of a matrix; 1 for vectors.
    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            grad: None,
        }
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    /// Gradient buffer, allocated as zeros on first use.
    pub fn grad_mut(&mut self) -> &mut [f64] {
        let len = self.values.len();
        self.grad.get_or_insert_with(|| vec![0.0; len])
    }

    /// Gradient buffer together with the values, for in-place updates.
    pub fn split_grad_mut(&mut self) -> (&mut [f64], &[f64]) {
        let len = self.values.len();
        let grad = self.grad.get_or_insert_with(|| vec![0.0; len]);
        (&mut self.values, grad)
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `y = self · x` for a matrix `self`.
    pub(crate) fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let cols = self.cols();
        debug_assert_eq!(cols, x.len());
        self.values
            .chunks_exact(cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `out += selfᵀ · dy` for a matrix `self`.
    pub(crate) fn matvec_t_acc(&self, dy: &[f64], out: &mut [f64]) {
        let cols = self.cols();
        for (row, &d) in self.values.chunks_exact(cols).zip(dy) {
            if d == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * d;
            }
        }
    }

    /// `grad += dy ⊗ x` for a matrix-shaped tensor.
    pub(crate) fn outer_acc_grad(&mut self, dy: &[f64], x: &[f64]) {
        let cols = self.cols();
        let g = self.grad_mut();
        for (grow, &d) in g.chunks_exact_mut(cols).zip(dy) {
            if d == 0.0 {
                continue;
            }
            for (gv, xv) in grow.iter_mut().zip(x) {
                *gv += d * xv;
            }
        }
    }

    /// `grad += scale · values`.
    pub(crate) fn add_values_to_grad(&mut self, scale: f64) {
        let len = self.values.len();
        let grad = self.grad.get_or_insert_with(|| vec![0.0; len]);
        for (g, v) in grad.iter_mut().zip(&self.values) {
            *g += scale * v;
        }
    }

    pub(crate) fn add_grad(&mut self, dy: &[f64]) {
        for (g, d) in self.grad_mut().iter_mut().zip(dy) {
            *g += d;
        }
    }
}

/// Glorot/Xavier uniform matrix with `fan_out` rows and `fan_in` columns.
pub fn xavier_uniform<R: Rng + ?Sized>(fan_out: usize, fan_in: usize, rng: &mut R) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::uniform(&[fan_out, fan_in], limit, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor::from_vec(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::from_vec(vec![2, 3], vec![0.0; 5]),
            Err(Error::Dimension {
                expected: 6,
                found: 5,
                ..
            })
        ));
        assert!(Tensor::from_vec(vec![0], vec![]).is_err());
        assert!(Tensor::from_vec(vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn grad_buffer_matches_values() {
        let mut t = Tensor::zeros(&[3, 2]);
        assert!(t.grad().is_none());
        assert_eq!(t.grad_mut().len(), 6);
        t.grad_mut()[4] = 2.0;
        t.zero_grad();
        assert!(t.grad().unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn matvec_and_transpose() {
        let m = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        let mut out = vec![0.0; 3];
        m.matvec_t_acc(&[1.0, 1.0], &mut out);
        assert_eq!(out, vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn serde_rejects_inconsistent_shape() {
        let bad = r#"{"shape":[2,2],"values":[1.0,2.0,3.0]}"#;
        assert!(serde_json::from_str::<Tensor>(bad).is_err());
        let good = r#"{"shape":[2,2],"values":[1.0,2.0,3.0,4.0]}"#;
        let t: Tensor = serde_json::from_str(good).unwrap();
        assert_eq!(t.row(1), &[3.0, 4.0]);
    }
}
