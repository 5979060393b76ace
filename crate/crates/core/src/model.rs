//! In-memory forms of exact SVM models and labeled datasets.

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// Kernel of an exact model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `exp(-gamma * ||x - z||^2)`
    Rbf { gamma: f64 },
    /// `(gamma * x'z + beta)^2`
    Poly2 { gamma: f64, beta: f64 },
}

impl Kernel {
    pub fn gamma(&self) -> f64 {
        match *self {
            Kernel::Rbf { gamma } | Kernel::Poly2 { gamma, .. } => gamma,
        }
    }

    pub fn eval(&self, x: &SparseVector, z: &SparseVector) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => (-gamma * x.dist_sq(z)).exp(),
            Kernel::Poly2 { gamma, beta } => {
                let t = gamma * x.dot(z) + beta;
                t * t
            }
        }
    }
}

/// Binary classifier (with its two class labels) or regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// A positive decision value maps to `labels.0`, anything else to `labels.1`.
    BinaryClassifier {
        labels: (i32, i32),
    },
    Regressor,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::BinaryClassifier { .. } => "binary-classifier",
            ModelKind::Regressor => "regressor",
        }
    }

    /// Label for a decision value; `None` for regressors.
    pub fn label_for(&self, value: f64) -> Option<i32> {
        match *self {
            ModelKind::BinaryClassifier { labels } => {
                Some(if value > 0.0 { labels.0 } else { labels.1 })
            }
            ModelKind::Regressor => None,
        }
    }
}

/// A kernel expansion `f(z) = sum_i coef_i * k(x_i, z) + bias`.
///
/// `coefficients[i]` is the signed dual weight of `support_vectors[i]`
/// (what LIBSVM stores as `sv_coef`).
#[derive(Debug, Clone, PartialEq)]
pub struct ExactModel {
    pub kernel: Kernel,
    pub bias: f64,
    pub coefficients: Vec<f64>,
    pub support_vectors: Vec<SparseVector>,
    pub dimension: usize,
    pub kind: ModelKind,
}

impl ExactModel {
    /// Validates the parts and infers the dimension from the largest SV index.
    pub fn new(
        kernel: Kernel,
        bias: f64,
        coefficients: Vec<f64>,
        support_vectors: Vec<SparseVector>,
        kind: ModelKind,
    ) -> Result<Self> {
        if coefficients.len() != support_vectors.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} support vectors",
                coefficients.len(),
                support_vectors.len()
            )));
        }
        if coefficients.is_empty() {
            return Err(Error::InvalidArgument(
                "model has no support vectors".into(),
            ));
        }
        let gamma = kernel.gamma();
        let gamma_ok = match kernel {
            Kernel::Rbf { .. } => gamma > 0.0 && gamma.is_finite(),
            Kernel::Poly2 { beta, .. } => gamma.is_finite() && beta.is_finite(),
        };
        if !gamma_ok {
            return Err(Error::InvalidArgument(format!(
                "invalid kernel parameters {kernel:?}"
            )));
        }
        if !bias.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-finite coefficient or bias".into(),
            ));
        }
        let dimension = support_vectors
            .iter()
            .map(|sv| sv.max_index() as usize)
            .max()
            .unwrap_or(0);
        Ok(Self {
            kernel,
            bias,
            coefficients,
            support_vectors,
            dimension,
            kind,
        })
    }

    /// Widens the dimension, e.g. to the feature count of the training data.
    /// It can never shrink below the largest support-vector index.
    pub fn with_dimension(mut self, dimension: usize) -> Result<Self> {
        if dimension < self.dimension {
            return Err(Error::InvalidArgument(format!(
                "dimension {dimension} is below the largest support-vector index {}",
                self.dimension
            )));
        }
        self.dimension = dimension;
        Ok(self)
    }

    pub fn n_sv(&self) -> usize {
        self.support_vectors.len()
    }

    pub fn gamma(&self) -> f64 {
        self.kernel.gamma()
    }

    /// `max_i ||x_i||^2` over the support vectors.
    pub fn max_sv_norm_sq(&self) -> f64 {
        self.support_vectors
            .iter()
            .map(SparseVector::norm_sq)
            .fold(0.0, f64::max)
    }

    /// Rejects instances with feature indices beyond the model dimension.
    /// `instance` is only used to label the error.
    pub fn check_dimension(&self, z: &SparseVector, instance: usize) -> Result<()> {
        check_dimension(self.dimension, z, instance)
    }
}

pub(crate) fn check_dimension(dimension: usize, z: &SparseVector, instance: usize) -> Result<()> {
    let index = z.max_index();
    if index as usize > dimension {
        return Err(Error::Dimension {
            instance,
            index,
            dimension,
        });
    }
    Ok(())
}

/// One labeled row of a dataset. `line` is the 1-based source line.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub label: f64,
    pub features: SparseVector,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub instances: Vec<Instance>,
    /// Largest feature index seen in any instance.
    pub dimension: usize,
}

impl Dataset {
    pub fn new(instances: Vec<Instance>) -> Self {
        let dimension = instances
            .iter()
            .map(|inst| inst.features.max_index() as usize)
            .max()
            .unwrap_or(0);
        Self {
            instances,
            dimension,
        }
    }

    /// Unlabeled-source convenience: numbers instances 1..=n and labels them 0.
    pub fn from_features(features: impl IntoIterator<Item = SparseVector>) -> Self {
        Self::new(
            features
                .into_iter()
                .enumerate()
                .map(|(i, features)| Instance {
                    label: 0.0,
                    features,
                    line: i + 1,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn max_norm_sq(&self) -> f64 {
        self.instances
            .iter()
            .map(|inst| inst.features.norm_sq())
            .fold(0.0, f64::max)
    }

    /// Fails on the first instance whose indices exceed `dimension`.
    pub fn check_dimension(&self, dimension: usize) -> Result<()> {
        if self.dimension <= dimension {
            return Ok(());
        }
        for inst in &self.instances {
            check_dimension(dimension, &inst.features, inst.line)?;
        }
        Ok(())
    }
}
