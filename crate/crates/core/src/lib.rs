//! Fast prediction for RBF-kernel SVM models.
//!
//! An RBF model's decision function `sum_i a_i exp(-gamma ||x_i - z||^2) + b`
//! costs O(n_SV * d) per prediction. Replacing each `exp(2 gamma x_i'z)` by its
//! second-order Maclaurin polynomial folds all support vectors into a scalar,
//! a vector and a symmetric matrix, so prediction drops to O(d^2) and no
//! longer depends on the number of support vectors.
//!
//! - [`io`] reads LIBSVM models and data and reads/writes the compact format.
//! - [`exact`] is the reference predictor.
//! - [`approx`] builds and evaluates the compact model.
//! - [`bounds`] checks when the approximation is trustworthy.
//! - [`poly2`] expands degree-2 polynomial models into the same shape.
//! - [`bench`] compares, times and sizes exact vs. approximate models.
//! - [`synth`] generates seeded synthetic data and models.

pub mod approx;
pub mod bench;
pub mod bounds;
pub mod error;
pub mod exact;
pub mod io;
pub mod model;
pub mod poly2;
pub mod sparse;
pub mod synth;

pub use approx::{
    build_approx, decide_approx, decide_approx_batch, maclaurin_exp, ApproxModel, ApproxPrediction,
    DenseMath, SymMatrix,
};
pub use error::{Error, Result};
pub use exact::{decide_exact, rbf_kernel, DecisionValue};
pub use model::{Dataset, ExactModel, Instance, Kernel, ModelKind};
pub use sparse::SparseVector;
