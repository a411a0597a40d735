use super::gru::GruParams;
use super::linear::LinearParams;
use super::tensor::Tensor;

/// A fixed, ordered collection of parameter tensors.
pub trait Parameters {
    fn tensors(&self) -> Vec<&Tensor>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;

    fn zero_grad(&mut self) {
        for t in self.tensors_mut() {
            t.zero_grad();
        }
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

impl Parameters for Tensor {
    fn tensors(&self) -> Vec<&Tensor> {
        vec![self]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![self]
    }
}

impl Parameters for LinearParams {
    fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}

impl Parameters for GruParams {
    fn tensors(&self) -> Vec<&Tensor> {
        GruParams::tensors(self).to_vec()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        GruParams::tensors_mut(self).into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// (tensor index, entry index) of the worst entry.
    pub worst: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

pub const GRAD_CHECK_FLOOR: f64 = 1e-8;

/// Compares the gradients stored in `params` against central differences of `loss`.
///
/// Tensors without a gradient buffer are treated as having zero gradient.
/// Relative error is `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<P: Parameters>(params: &mut P, eps: f64, loss: impl Fn(&P) -> f64) -> GradCheckReport {
    grad_check_with_floor(params, eps, GRAD_CHECK_FLOOR, loss)
}

/// [`grad_check`] with a caller-chosen denominator floor. Entries whose
/// gradient is far below `floor` are then judged on absolute error.
pub fn grad_check_with_floor<P: Parameters>(
    params: &mut P,
    eps: f64,
    floor: f64,
    loss: impl Fn(&P) -> f64,
) -> GradCheckReport {
    let analytic: Vec<Vec<f64>> = params
        .tensors()
        .iter()
        .map(|t| t.grad().map_or_else(|| vec![0.0; t.len()], <[f64]>::to_vec))
        .collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (0, 0),
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for (ti, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let original = params.tensors()[ti].values()[j];
            params.tensors_mut()[ti].values_mut()[j] = original + eps;
            let plus = loss(params);
            params.tensors_mut()[ti].values_mut()[j] = original - eps;
            let minus = loss(params);
            params.tensors_mut()[ti].values_mut()[j] = original;

            let numeric = (plus - minus) / (2.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = (ti, j);
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    report
}
