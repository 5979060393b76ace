//! Validity bounds for the second-order approximation.
//!
//! Each term's exponent `2 gamma x_i'z` must stay inside `(-1/2, 1/2)` for the
//! Maclaurin relative error to stay below 3.05%. Cauchy-Schwarz replaces the
//! inner product with norms, giving a check that needs only `||x_M||^2` (the
//! largest SV norm, stored in the compact model) and `||z||^2`:
//!
//! ```text
//! ||x_M||^2 ||z||^2 < 1 / (16 gamma^2)
//! ```
//!
//! Both checks are strict. A degenerate zero norm admits every gamma, which is
//! reported as `f64::INFINITY`.

use crate::error::{Error, Result};
use crate::model::{Dataset, ExactModel};
use crate::sparse::SparseVector;

/// `|2 gamma x'z| < 1/2`
pub fn exponent_bound_holds(x: &SparseVector, z: &SparseVector, gamma: f64) -> bool {
    (2.0 * gamma * x.dot(z)).abs() < 0.5
}

/// `norm_sq_x * norm_sq_z < 1 / (16 gamma^2)`
pub fn cauchy_bound_holds(norm_sq_x: f64, norm_sq_z: f64, gamma: f64) -> bool {
    norm_sq_x * norm_sq_z < 1.0 / (16.0 * gamma * gamma)
}

/// Largest gamma for data that has not been trained on yet: both norms in
/// the bound are replaced by the largest instance norm, so the result is
/// `1 / (4 max ||z||^2)`. Conservative, since the largest instance need not
/// become a support vector.
pub fn gamma_max_for_dataset(data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let max_norm_sq = data.max_norm_sq();
    Ok(if max_norm_sq == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (4.0 * max_norm_sq)
    })
}

/// `1 / (4 ||x_M|| max||z||)` for a trained model and the largest squared
/// norm of the data it will see.
pub fn gamma_max_for_model(model: &ExactModel, data_max_norm_sq: f64) -> f64 {
    gamma_max_for_norms(model.max_sv_norm_sq(), data_max_norm_sq)
}

/// Model-only variant assuming no instance is longer than `x_M`:
/// `1 / (4 ||x_M||^2)`.
pub fn gamma_max_model_only(model: &ExactModel) -> f64 {
    let n = model.max_sv_norm_sq();
    gamma_max_for_norms(n, n)
}

pub fn gamma_max_for_norms(norm_sq_x: f64, norm_sq_z: f64) -> f64 {
    if norm_sq_x == 0.0 || norm_sq_z == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (4.0 * (norm_sq_x * norm_sq_z).sqrt())
    }
}

/// How a model's gamma relates to the bound over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub gamma: f64,
    pub gamma_max: f64,
    pub max_norm_sq_model: f64,
    pub max_norm_sq_data: f64,
    pub n_instances: usize,
    pub n_violations: usize,
}

impl BoundReport {
    pub fn violation_fraction(&self) -> f64 {
        if self.n_instances == 0 {
            0.0
        } else {
            self.n_violations as f64 / self.n_instances as f64
        }
    }
}

/// Checks every instance of `data` against the bound at `gamma`.
pub fn bound_report(max_sv_norm_sq: f64, gamma: f64, data: &Dataset) -> BoundReport {
    let mut max_norm_sq_data = 0.0f64;
    let mut n_violations = 0;
    for inst in &data.instances {
        let n = inst.features.norm_sq();
        max_norm_sq_data = max_norm_sq_data.max(n);
        if !cauchy_bound_holds(max_sv_norm_sq, n, gamma) {
            n_violations += 1;
        }
    }
    BoundReport {
        gamma,
        gamma_max: gamma_max_for_norms(max_sv_norm_sq, max_norm_sq_data),
        max_norm_sq_model: max_sv_norm_sq,
        max_norm_sq_data,
        n_instances: data.len(),
        n_violations,
    }
}
