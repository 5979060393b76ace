//! Degree-2 polynomial kernels, whose expansion into a quadratic form is exact.
//!
//! `(gamma x'z + beta)^2 = beta^2 + 2 beta gamma x'z + gamma^2 (x'z)^2`, so a
//! poly-2 model collapses to `c + v'z + z'Mz + b` with
//!
//! ```text
//! c = beta^2 sum_i a_i,  v = sum_i 2 beta gamma a_i x_i,  M = sum_i gamma^2 a_i x_i x_i'
//! ```
//!
//! The RBF approximation has the same shape. With `beta = 1` and coefficients
//! rescaled by `exp(-gamma ||x_i||^2)`, `c` and `v` coincide, the RBF `M` is
//! exactly twice the poly-2 `M`, and the RBF form is additionally multiplied
//! by `exp(-gamma ||z||^2)`.

use std::fmt::Write as _;

use crate::approx::{ApproxModel, DenseMath, SparseLoops, SymMatrix};
use crate::error::{Error, Result};
use crate::exact::DecisionValue;
use crate::model::{check_dimension, ExactModel, Kernel, ModelKind};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poly2Params {
    pub gamma: f64,
    pub beta: f64,
}

/// `(gamma x'z + beta)^2`
pub fn poly2_kernel(x: &SparseVector, z: &SparseVector, p: Poly2Params) -> f64 {
    let t = p.gamma * x.dot(z) + p.beta;
    t * t
}

/// Exact quadratic form of a poly-2 model: `c + v'z + z'Mz + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2Expansion {
    pub params: Poly2Params,
    pub bias: f64,
    pub c: f64,
    pub v: Vec<f64>,
    pub m: SymMatrix,
    pub kind: ModelKind,
}

impl Poly2Expansion {
    pub fn dimension(&self) -> usize {
        self.v.len()
    }

    pub fn decide(&self, z: &SparseVector) -> Result<DecisionValue> {
        check_dimension(self.dimension(), z, 1)?;
        let math = SparseLoops;
        let value = self.c + math.dot(&self.v, z) + math.quad_form(&self.m, z) + self.bias;
        Ok(DecisionValue {
            value,
            label: self.kind.label_for(value),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "poly2-expansion v1").unwrap();
        writeln!(out, "kind {}", self.kind.name()).unwrap();
        if let ModelKind::BinaryClassifier { labels: (a, b) } = self.kind {
            writeln!(out, "labels {a} {b}").unwrap();
        }
        writeln!(out, "d {}", self.dimension()).unwrap();
        writeln!(out, "gamma {:?}", self.params.gamma).unwrap();
        writeln!(out, "beta {:?}", self.params.beta).unwrap();
        writeln!(out, "b {:?}", self.bias).unwrap();
        writeln!(out, "c {:?}", self.c).unwrap();
        for (key, vals) in [("v", &self.v[..]), ("M", self.m.packed())] {
            out.push_str(key);
            for x in vals {
                write!(out, " {x:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Expands a model with a degree-2 polynomial kernel.
pub fn expand_poly2(model: &ExactModel) -> Result<Poly2Expansion> {
    let Kernel::Poly2 { gamma, beta } = model.kernel else {
        return Err(Error::UnsupportedKernel(format!(
            "{:?} (expected polynomial of degree 2)",
            model.kernel
        )));
    };
    let math = SparseLoops;
    let d = model.dimension;
    let sum: f64 = model.coefficients.iter().sum();
    let mut v = vec![0.0; d];
    let mut m = SymMatrix::zeros(d);
    for (a, x) in model.coefficients.iter().zip(&model.support_vectors) {
        math.axpy(&mut v, x, 2.0 * beta * gamma * a);
        math.rank1_update(&mut m, x, gamma * gamma * a);
    }
    Ok(Poly2Expansion {
        params: Poly2Params { gamma, beta },
        bias: model.bias,
        c: beta * beta * sum,
        v,
        m,
        kind: model.kind,
    })
}

/// The poly-2 model (`beta = 1`, same gamma) whose coefficients absorb the
/// per-SV factors `exp(-gamma ||x_i||^2)` of an RBF model.
pub fn rbf_poly2_counterpart(rbf: &ExactModel) -> Result<ExactModel> {
    let Kernel::Rbf { gamma } = rbf.kernel else {
        return Err(Error::UnsupportedKernel(format!(
            "{:?} (expected rbf)",
            rbf.kernel
        )));
    };
    let coefficients = rbf
        .coefficients
        .iter()
        .zip(&rbf.support_vectors)
        .map(|(a, x)| a * (-gamma * x.norm_sq()).exp())
        .collect();
    ExactModel::new(
        Kernel::Poly2 { gamma, beta: 1.0 },
        rbf.bias,
        coefficients,
        rbf.support_vectors.clone(),
        rbf.kind,
    )?
    .with_dimension(rbf.dimension)
}

/// `exp(-gamma ||z||^2)`, the per-instance factor that scales the quadratic
/// part of an approximate model (and hence the relative weight of its bias).
/// Within the validity bound and with `||z|| <= ||x_M||` it lies in
/// `(exp(-1/4), 1]`.
pub fn scaling_factor(model: &ApproxModel, z: &SparseVector) -> f64 {
    (-model.gamma * z.norm_sq()).exp()
}
