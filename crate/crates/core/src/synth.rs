//! Seeded synthetic data and models, so experiments run without external
//! datasets.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::exact::decide_exact_batch;
use crate::model::{Dataset, ExactModel, Instance, Kernel, ModelKind};
use crate::sparse::SparseVector;

/// Two Gaussian clusters, labels `+1` and `-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub dim: usize,
    pub n: usize,
    /// Probability that a feature is zero (and therefore not stored).
    pub sparsity: f64,
    /// Per-feature distance of each cluster mean from the origin.
    pub shift: f64,
    pub noise: f64,
    /// Values are rounded to this many decimals, like typical data files.
    pub decimals: u32,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            dim: 20,
            n: 1000,
            sparsity: 0.0,
            shift: 0.5,
            noise: 1.0,
            decimals: 4,
            seed: 0,
        }
    }
}

pub fn gaussian_clusters(cfg: &ClusterConfig) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // One random sign per feature; class +1 sits at +shift*sign, class -1 at -shift*sign.
    let signs: Vec<f64> = (0..cfg.dim)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let scale = 10f64.powi(cfg.decimals as i32);
    let instances = (0..cfg.n)
        .map(|i| {
            let label = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let entries: Vec<(u32, f64)> = signs
                .iter()
                .enumerate()
                .filter_map(|(j, s)| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    let value = label * s * cfg.shift + cfg.noise * noise;
                    let value = (value * scale).round() / scale;
                    (rng.random::<f64>() >= cfg.sparsity && value != 0.0)
                        .then_some((j as u32 + 1, value))
                })
                .collect();
            Instance {
                label,
                features: SparseVector::new(entries).expect("generated entries are valid"),
                line: i + 1,
            }
        })
        .collect();
    let mut data = Dataset::new(instances);
    data.dimension = data.dimension.max(cfg.dim);
    data
}

/// An RBF classifier built without training: `n_sv` instances of `pool`
/// become support vectors with weight `label * U(0.05, 1)`, and the bias
/// centers the decision values of the support vectors on zero.
pub fn random_rbf_classifier(
    pool: &Dataset,
    n_sv: usize,
    gamma: f64,
    seed: u64,
) -> Result<ExactModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = if n_sv <= pool.len() {
        sample(&mut rng, pool.len(), n_sv).into_vec()
    } else {
        (0..n_sv).map(|_| rng.random_range(0..pool.len())).collect()
    };
    let coefficients = picks
        .iter()
        .map(|&i| pool.instances[i].label.signum() * rng.random_range(0.05..1.0))
        .collect();
    let support_vectors = picks
        .iter()
        .map(|&i| pool.instances[i].features.clone())
        .collect();
    let model = ExactModel::new(
        Kernel::Rbf { gamma },
        0.0,
        coefficients,
        support_vectors,
        ModelKind::BinaryClassifier { labels: (1, -1) },
    )?
    .with_dimension(pool.dimension)?;

    let calibration = Dataset::from_features(
        picks
            .iter()
            .take(256)
            .map(|&i| pool.instances[i].features.clone()),
    );
    let mut values: Vec<f64> = decide_exact_batch(&model, &calibration)?
        .into_iter()
        .map(|d| d.value)
        .collect();
    values.sort_by(f64::total_cmp);
    let median = values[values.len() / 2];
    Ok(ExactModel {
        bias: -median,
        ..model
    })
}

/// Renders a model as a LIBSVM model file (binary or regression).
pub fn to_libsvm_text(model: &ExactModel) -> String {
    let mut out = String::new();
    let svm_type = match model.kind {
        ModelKind::BinaryClassifier { .. } => "c_svc",
        ModelKind::Regressor => "epsilon_svr",
    };
    writeln!(out, "svm_type {svm_type}").unwrap();
    match model.kernel {
        Kernel::Rbf { gamma } => {
            writeln!(out, "kernel_type rbf\ngamma {gamma:?}").unwrap();
        }
        Kernel::Poly2 { gamma, beta } => {
            writeln!(
                out,
                "kernel_type polynomial\ndegree 2\ngamma {gamma:?}\ncoef0 {beta:?}"
            )
            .unwrap();
        }
    }
    writeln!(
        out,
        "nr_class 2\ntotal_sv {}\nrho {:?}",
        model.n_sv(),
        -model.bias
    )
    .unwrap();
    if let ModelKind::BinaryClassifier { labels: (a, b) } = model.kind {
        let positive = model.coefficients.iter().filter(|&&c| c > 0.0).count();
        writeln!(
            out,
            "label {a} {b}\nnr_sv {positive} {}",
            model.n_sv() - positive
        )
        .unwrap();
    }
    out.push_str("SV\n");
    for (coef, sv) in model.coefficients.iter().zip(&model.support_vectors) {
        write!(out, "{coef:?} ").unwrap();
        for (j, x) in sv.iter() {
            write!(out, "{j}:{x:?} ").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Renders a dataset in LIBSVM data format.
pub fn to_libsvm_data(data: &Dataset) -> String {
    let mut out = String::new();
    for inst in &data.instances {
        write!(out, "{}", inst.label).unwrap();
        for (j, x) in inst.features.iter() {
            write!(out, " {j}:{x:?}").unwrap();
        }
        out.push('\n');
    }
    out
}
