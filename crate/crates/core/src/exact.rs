//! Exact kernel-expansion predictor. This is the reference every
//! approximation is measured against, so it stays as plain as possible.

use crate::error::Result;
use crate::model::{Dataset, ExactModel};
use crate::sparse::SparseVector;

/// A decision value and, for classifiers, the label it selects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionValue {
    pub value: f64,
    pub label: Option<i32>,
}

/// `exp(-gamma * ||x - z||^2)`.
pub fn rbf_kernel(x: &SparseVector, z: &SparseVector, gamma: f64) -> f64 {
    (-gamma * x.dist_sq(z)).exp()
}

/// `sum_i coef_i * k(x_i, z) + b` using the model's own kernel.
pub fn decide_exact(model: &ExactModel, z: &SparseVector) -> Result<DecisionValue> {
    model.check_dimension(z, 1)?;
    Ok(decide_unchecked(model, z))
}

fn decide_unchecked(model: &ExactModel, z: &SparseVector) -> DecisionValue {
    let sum: f64 = model
        .coefficients
        .iter()
        .zip(&model.support_vectors)
        .map(|(coef, sv)| coef * model.kernel.eval(sv, z))
        .sum();
    let value = sum + model.bias;
    DecisionValue {
        value,
        label: model.kind.label_for(value),
    }
}

/// Predicts every instance of `data`, failing on the first one whose
/// indices exceed the model dimension.
pub fn decide_exact_batch(model: &ExactModel, data: &Dataset) -> Result<Vec<DecisionValue>> {
    data.check_dimension(model.dimension)?;
    Ok(data
        .instances
        .iter()
        .map(|inst| decide_unchecked(model, &inst.features))
        .collect())
}
