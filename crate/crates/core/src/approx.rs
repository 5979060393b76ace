//! Second-order approximation of an RBF expansion.
//!
//! Writing `exp(-g||x - z||^2) = exp(-g||x||^2) exp(-g||z||^2) exp(2g x'z)` and
//! replacing `exp(t)` by `1 + t + t^2/2` turns the whole expansion into
//!
//! ```text
//! f(z) ~ exp(-g||z||^2) * (c + v'z + z'Mz) + b
//! c = sum_i s_i,  v = sum_i 2g s_i x_i,  M = sum_i 2g^2 s_i x_i x_i'
//! s_i = coef_i * exp(-g||x_i||^2)
//! ```
//!
//! so prediction costs O(nnz(z)^2) regardless of the number of support
//! vectors. `v` is the gradient of the unapproximated sum at the origin and
//! `M` is half its Hessian (the quadratic form carries no extra 1/2).

use rayon::prelude::*;

use crate::bounds::cauchy_bound_holds;
use crate::error::{Error, Result};
use crate::exact::DecisionValue;
use crate::model::{check_dimension, Dataset, ExactModel, Kernel, ModelKind};
use crate::sparse::SparseVector;

/// Second-order Maclaurin polynomial of `exp`: `1 + t + t^2/2`.
#[inline]
pub fn maclaurin_exp(t: f64) -> f64 {
    1.0 + t + 0.5 * t * t
}

/// `|(e^x - (1 + x + x^2/2)) / e^x|`, below 0.0305 for `|x| <= 1/2`.
pub fn maclaurin_rel_error(x: f64) -> f64 {
    ((x.exp() - maclaurin_exp(x)) / x.exp()).abs()
}

/// `(x, maclaurin_rel_error(x))` on the grid `min, min + step, ...` up to
/// `max` (included when it falls on the grid, within rounding).
pub fn error_curve(min: f64, max: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(Error::InvalidArgument(format!("empty range {min}:{max}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            let x = min + i as f64 * step;
            (x, maclaurin_rel_error(x))
        })
        .collect())
}

/// Symmetric `dim x dim` matrix stored as its packed upper triangle,
/// row-major: row `j` holds columns `j..dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; packed_len(dim)],
        }
    }

    /// Wraps a packed upper triangle; `None` if the length is not `dim(dim+1)/2`.
    pub fn from_packed(dim: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == packed_len(dim)).then_some(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    /// Offset of element `(j, j)` in the packed storage (0-based `j`).
    #[inline]
    fn row_start(&self, j: usize) -> usize {
        j * (2 * self.dim - j + 1) / 2
    }

    /// Element `(j, k)`, 0-based, either triangle.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        self.data[self.row_start(j) + k - j]
    }

    /// Full row-major `dim x dim` copy.
    pub fn to_full(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for j in 0..d {
            for k in 0..d {
                out[j * d + k] = self.get(j, k);
            }
        }
        out
    }
}

pub(crate) fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// The dense linear-algebra kernels used to build and evaluate quadratic
/// forms. Swapping the backend changes speed, not results beyond rounding.
pub trait DenseMath: Sync {
    fn name(&self) -> &'static str;
    /// `v += scale * x`
    fn axpy(&self, v: &mut [f64], x: &SparseVector, scale: f64);
    /// `m += scale * x x'`
    fn rank1_update(&self, m: &mut SymMatrix, x: &SparseVector, scale: f64);
    /// `v'z`
    fn dot(&self, v: &[f64], z: &SparseVector) -> f64;
    /// `z'Mz`
    fn quad_form(&self, m: &SymMatrix, z: &SparseVector) -> f64;
}

/// Loops over stored nonzeros only. Building costs `O(sum_i nnz(x_i)^2)`,
/// each quadratic form `O(nnz(z)^2)`. The default backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct SparseLoops;

impl DenseMath for SparseLoops {
    fn name(&self) -> &'static str {
        "sparse-loops"
    }

    fn axpy(&self, v: &mut [f64], x: &SparseVector, scale: f64) {
        for (j, xj) in x.iter() {
            v[j as usize - 1] += scale * xj;
        }
    }

    fn rank1_update(&self, m: &mut SymMatrix, x: &SparseVector, scale: f64) {
        let (idx, val) = (x.indices(), x.values());
        for p in 0..idx.len() {
            let j = idx[p] as usize - 1;
            let base = m.row_start(j) - j;
            let sp = scale * val[p];
            for q in p..idx.len() {
                m.data[base + idx[q] as usize - 1] += sp * val[q];
            }
        }
    }

    fn dot(&self, v: &[f64], z: &SparseVector) -> f64 {
        z.iter().map(|(j, zj)| v[j as usize - 1] * zj).sum()
    }

    fn quad_form(&self, m: &SymMatrix, z: &SparseVector) -> f64 {
        let (idx, val) = (z.indices(), z.values());
        let mut diag = 0.0;
        let mut cross = 0.0;
        for p in 0..idx.len() {
            let j = idx[p] as usize - 1;
            let base = m.row_start(j) - j;
            let zp = val[p];
            diag += m.data[base + j] * zp * zp;
            let mut row = 0.0;
            for q in p + 1..idx.len() {
                row += m.data[base + idx[q] as usize - 1] * val[q];
            }
            cross += zp * row;
        }
        diag + 2.0 * cross
    }
}

/// Densifies every operand and sweeps the whole triangle. Cost is `O(d^2)`
/// per update or evaluation no matter how sparse the input is; useful as a
/// second route for cross-checking and as the dense-data baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseLoops;

impl DenseMath for DenseLoops {
    fn name(&self) -> &'static str {
        "dense-loops"
    }

    fn axpy(&self, v: &mut [f64], x: &SparseVector, scale: f64) {
        let x = x.to_dense(v.len());
        for (vj, xj) in v.iter_mut().zip(x) {
            *vj += scale * xj;
        }
    }

    fn rank1_update(&self, m: &mut SymMatrix, x: &SparseVector, scale: f64) {
        let d = m.dim;
        let x = x.to_dense(d);
        let mut pos = 0;
        for j in 0..d {
            let sj = scale * x[j];
            for xk in &x[j..] {
                m.data[pos] += sj * xk;
                pos += 1;
            }
        }
    }

    fn dot(&self, v: &[f64], z: &SparseVector) -> f64 {
        let z = z.to_dense(v.len());
        v.iter().zip(z).map(|(a, b)| a * b).sum()
    }

    fn quad_form(&self, m: &SymMatrix, z: &SparseVector) -> f64 {
        let d = m.dim;
        let z = z.to_dense(d);
        let mut diag = 0.0;
        let mut cross = 0.0;
        let mut pos = 0;
        for j in 0..d {
            diag += m.data[pos] * z[j] * z[j];
            let row: f64 = m.data[pos + 1..pos + d - j]
                .iter()
                .zip(&z[j + 1..])
                .map(|(a, b)| a * b)
                .sum();
            cross += z[j] * row;
            pos += d - j;
        }
        diag + 2.0 * cross
    }
}

/// Compact approximate model: `f(z) ~ exp(-gamma ||z||^2)(c + v'z + z'Mz) + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxModel {
    pub gamma: f64,
    pub bias: f64,
    pub c: f64,
    pub v: Vec<f64>,
    pub m: SymMatrix,
    /// `max_i ||x_i||^2` over the source support vectors.
    pub max_sv_norm_sq: f64,
    pub kind: ModelKind,
}

impl ApproxModel {
    pub fn dimension(&self) -> usize {
        self.v.len()
    }

    /// `max_sv_norm_sq * ||z||^2 < 1 / (16 gamma^2)`
    pub fn bound_holds(&self, z_norm_sq: f64) -> bool {
        cauchy_bound_holds(self.max_sv_norm_sq, z_norm_sq, self.gamma)
    }

    /// Approximate decision value and `||z||^2` (shared with the bound check).
    fn eval(&self, z: &SparseVector, math: &dyn DenseMath) -> (DecisionValue, f64) {
        let norm_sq = z.norm_sq();
        let g = self.c + math.dot(&self.v, z) + math.quad_form(&self.m, z);
        let value = (-self.gamma * norm_sq).exp() * g + self.bias;
        let decision = DecisionValue {
            value,
            label: self.kind.label_for(value),
        };
        (decision, norm_sq)
    }
}

/// Builds the compact model with the default [`SparseLoops`] backend.
pub fn build_approx(model: &ExactModel) -> Result<ApproxModel> {
    build_approx_with(model, &SparseLoops)
}

pub fn build_approx_with(model: &ExactModel, math: &dyn DenseMath) -> Result<ApproxModel> {
    let Kernel::Rbf { gamma } = model.kernel else {
        return Err(Error::UnsupportedKernel(format!(
            "{:?} (approximation needs an RBF kernel)",
            model.kernel
        )));
    };
    let d = model.dimension;
    let mut c = 0.0;
    let mut v = vec![0.0; d];
    let mut m = SymMatrix::zeros(d);
    let mut max_sv_norm_sq = 0.0f64;
    for (coef, x) in model.coefficients.iter().zip(&model.support_vectors) {
        let norm_sq = x.norm_sq();
        max_sv_norm_sq = max_sv_norm_sq.max(norm_sq);
        let scaled = coef * (-gamma * norm_sq).exp();
        c += scaled;
        math.axpy(&mut v, x, 2.0 * gamma * scaled);
        math.rank1_update(&mut m, x, 2.0 * gamma * gamma * scaled);
    }
    Ok(ApproxModel {
        gamma,
        bias: model.bias,
        c,
        v,
        m,
        max_sv_norm_sq,
        kind: model.kind,
    })
}

pub fn decide_approx(model: &ApproxModel, z: &SparseVector) -> Result<DecisionValue> {
    decide_approx_with(model, z, &SparseLoops)
}

pub fn decide_approx_with(
    model: &ApproxModel,
    z: &SparseVector,
    math: &dyn DenseMath,
) -> Result<DecisionValue> {
    check_dimension(model.dimension(), z, 1)?;
    Ok(model.eval(z, math).0)
}

/// One batch prediction. `bound_ok` is `None` unless the bound was checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxPrediction {
    pub decision: DecisionValue,
    pub bound_ok: Option<bool>,
}

pub fn decide_approx_batch(
    model: &ApproxModel,
    data: &Dataset,
    check_bound: bool,
) -> Result<Vec<ApproxPrediction>> {
    decide_approx_batch_with(model, data, check_bound, &SparseLoops)
}

pub fn decide_approx_batch_with(
    model: &ApproxModel,
    data: &Dataset,
    check_bound: bool,
    math: &dyn DenseMath,
) -> Result<Vec<ApproxPrediction>> {
    data.check_dimension(model.dimension())?;
    Ok(data
        .instances
        .iter()
        .map(|inst| predict_one(model, &inst.features, check_bound, math))
        .collect())
}

/// Like [`decide_approx_batch`] but spread over the rayon thread pool.
/// Output order matches the dataset.
pub fn decide_approx_batch_par(
    model: &ApproxModel,
    data: &Dataset,
    check_bound: bool,
) -> Result<Vec<ApproxPrediction>> {
    data.check_dimension(model.dimension())?;
    Ok(data
        .instances
        .par_iter()
        .map(|inst| predict_one(model, &inst.features, check_bound, &SparseLoops))
        .collect())
}

fn predict_one(
    model: &ApproxModel,
    z: &SparseVector,
    check_bound: bool,
    math: &dyn DenseMath,
) -> ApproxPrediction {
    let (decision, norm_sq) = model.eval(z, math);
    ApproxPrediction {
        decision,
        bound_ok: check_bound.then(|| model.bound_holds(norm_sq)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::decide_exact;

    fn sv(entries: &[(u32, f64)]) -> SparseVector {
        SparseVector::new(entries.iter().copied()).unwrap()
    }

    fn rbf_model(coefs: Vec<f64>, svs: Vec<SparseVector>, gamma: f64, bias: f64) -> ExactModel {
        ExactModel::new(
            Kernel::Rbf { gamma },
            bias,
            coefs,
            svs,
            ModelKind::BinaryClassifier { labels: (1, -1) },
        )
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn maclaurin_examples() {
        assert_eq!(maclaurin_exp(0.0), 1.0);
        assert_eq!(maclaurin_exp(0.5), 1.625);
        assert_eq!(maclaurin_exp(-0.5), 0.625);
    }

    #[test]
    fn error_curve_points() {
        let curve = error_curve(-0.5, 0.5, 0.25).unwrap();
        let xs: Vec<f64> = curve.iter().map(|p| p.0).collect();
        assert_eq!(xs, vec![-0.5, -0.25, 0.0, 0.25, 0.5]);
        // e^-0.5 = 0.6065306597, 0.625 / e^-0.5 - 1
        assert!((curve[0].1 - 0.0304508).abs() < 1e-6);
        assert_eq!(curve[2].1, 0.0);
        // 1 - 1.625 / e^0.5
        assert!((curve[4].1 - 0.0143877).abs() < 1e-6);
        assert!(curve.iter().all(|p| p.1 < 0.0305));
        assert!(error_curve(1.0, 0.0, 0.1).is_err());
        assert!(error_curve(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn packed_layout() {
        let m = SymMatrix::from_packed(3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(0, 2), 3.0);
        assert_eq!(m.get(2, 0), 3.0);
        assert_eq!(m.get(1, 1), 4.0);
        assert_eq!(m.get(1, 2), 5.0);
        assert_eq!(m.get(2, 2), 6.0);
        assert!(SymMatrix::from_packed(3, vec![0.0; 5]).is_none());
    }

    #[test]
    fn origin_sv_builds_constant() {
        let m = rbf_model(vec![0.7], vec![SparseVector::zero()], 0.3, 0.1)
            .with_dimension(3)
            .unwrap();
        let a = build_approx(&m).unwrap();
        assert_eq!(a.c, 0.7);
        assert!(a.v.iter().all(|&x| x == 0.0));
        assert!(a.m.packed().iter().all(|&x| x == 0.0));
        assert_eq!(a.max_sv_norm_sq, 0.0);

        let z = sv(&[(1, 0.4), (3, -2.0)]);
        let approx = decide_approx(&a, &z).unwrap().value;
        let expected = (-0.3 * z.norm_sq()).exp() * 0.7 + 0.1;
        assert!(close(approx, expected, 1e-15));
        assert!(close(approx, decide_exact(&m, &z).unwrap().value, 1e-15));
        assert_eq!(
            decide_approx(&a, &SparseVector::zero()).unwrap().value,
            a.c + a.bias
        );
    }

    #[test]
    fn single_sv_coefficients() {
        let m = rbf_model(vec![1.0], vec![sv(&[(1, 1.0)])], 0.1, 0.0);
        let a = build_approx(&m).unwrap();
        let e = (-0.1f64).exp();
        assert!(close(a.c, e, 1e-15));
        assert!(close(a.v[0], 0.2 * e, 1e-15));
        assert!(close(a.m.get(0, 0), 0.02 * e, 1e-15));

        let z = sv(&[(1, 1.0)]);
        let approx = decide_approx(&a, &z).unwrap().value;
        assert!(close(approx, 1.22 * (-0.2f64).exp(), 1e-14));
        let exact = decide_exact(&m, &z).unwrap().value;
        assert_eq!(exact, 1.0);
        assert!(((exact - approx).abs() - 0.0011484).abs() < 1e-6);
    }

    #[test]
    fn symmetric_svs_cancel_in_v() {
        let m = rbf_model(
            vec![1.0, 1.0],
            vec![sv(&[(1, 1.0)]), sv(&[(1, -1.0)])],
            0.1,
            0.0,
        );
        let a = build_approx(&m).unwrap();
        let e = (-0.1f64).exp();
        assert!(close(a.c, 2.0 * e, 1e-15));
        assert_eq!(a.v[0], 0.0);
        assert!(close(a.m.get(0, 0), 0.04 * e, 1e-15));
    }

    #[test]
    fn zero_coefficients_pass_bias_through() {
        let m = rbf_model(
            vec![0.0, 0.0],
            vec![sv(&[(1, 1.0)]), sv(&[(2, 3.0)])],
            0.5,
            -0.3,
        );
        let a = build_approx(&m).unwrap();
        assert_eq!(a.c, 0.0);
        assert!(a.v.iter().chain(a.m.packed()).all(|&x| x == 0.0));
        assert_eq!(decide_approx(&a, &sv(&[(2, 5.0)])).unwrap().value, -0.3);
    }

    fn fixture() -> ExactModel {
        rbf_model(
            vec![0.9, -1.4, 0.35, 0.6],
            vec![
                sv(&[(1, 0.5), (3, -1.0)]),
                sv(&[(2, 1.5), (3, 0.25)]),
                sv(&[(1, -0.75), (2, 0.5), (3, 1.0)]),
                sv(&[(3, 0.8)]),
            ],
            0.08,
            0.05,
        )
    }

    /// Central differences of `g(z) = sum_i s_i exp(2 gamma x_i'z)` at the origin.
    #[test]
    fn gradient_and_half_hessian_match_finite_differences() {
        let m = fixture();
        let gamma = m.gamma();
        let d = m.dimension;
        let a = build_approx(&m).unwrap();
        let dense: Vec<Vec<f64>> = m.support_vectors.iter().map(|x| x.to_dense(d)).collect();
        let g = |z: &[f64]| -> f64 {
            dense
                .iter()
                .zip(&m.coefficients)
                .map(|(x, c)| {
                    let xz: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
                    c * (-gamma * x.iter().map(|v| v * v).sum::<f64>()).exp()
                        * (2.0 * gamma * xz).exp()
                })
                .sum()
        };
        let h = 1e-4;
        let unit = |j: usize, s: f64| {
            let mut z = vec![0.0; d];
            z[j] += s;
            z
        };
        for j in 0..d {
            let grad = (g(&unit(j, h)) - g(&unit(j, -h))) / (2.0 * h);
            assert!(close(a.v[j], grad, 1e-5), "v[{j}] {} vs {grad}", a.v[j]);
            for k in 0..d {
                let at = |sj: f64, sk: f64| {
                    let mut z = vec![0.0; d];
                    z[j] += sj;
                    z[k] += sk;
                    g(&z)
                };
                let hess = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
                assert!(
                    close(2.0 * a.m.get(j, k), hess, 1e-4),
                    "M[{j},{k}] {} vs {hess}",
                    a.m.get(j, k)
                );
            }
        }
    }

    #[test]
    fn backends_agree() {
        let m = fixture();
        let sparse = build_approx_with(&m, &SparseLoops).unwrap();
        let dense = build_approx_with(&m, &DenseLoops).unwrap();
        for (a, b) in sparse.m.packed().iter().zip(dense.m.packed()) {
            assert!((a - b).abs() < 1e-15);
        }
        let z = sv(&[(1, 0.3), (2, -0.2), (3, 0.9)]);
        let a = decide_approx_with(&sparse, &z, &SparseLoops).unwrap().value;
        let b = decide_approx_with(&sparse, &z, &DenseLoops).unwrap().value;
        assert!(close(a, b, 1e-14));
    }

    #[test]
    fn batch_bound_flags() {
        let mut a = build_approx(&fixture()).unwrap();
        a.gamma = 0.25;
        a.max_sv_norm_sq = 1.0;
        // ||z||^2 = 0.9 and exactly 1.0
        let inside = SparseVector::new([(1, 0.9f64.sqrt())]).unwrap();
        let edge = sv(&[(2, 1.0)]);
        let data = Dataset::from_features([inside.clone(), edge.clone(), SparseVector::zero()]);
        let out = decide_approx_batch(&a, &data, true).unwrap();
        assert_eq!(out[0].bound_ok, Some(true));
        assert_eq!(out[1].bound_ok, Some(false));
        assert_eq!(out[2].bound_ok, Some(true));
        for (p, z) in out.iter().zip([&inside, &edge, &SparseVector::zero()]) {
            assert_eq!(p.decision, decide_approx(&a, z).unwrap());
        }
        let unchecked = decide_approx_batch(&a, &data, false).unwrap();
        assert!(unchecked.iter().all(|p| p.bound_ok.is_none()));
        assert_eq!(decide_approx_batch_par(&a, &data, true).unwrap(), out);
    }

    #[test]
    fn batch_rejects_wide_instances() {
        let a = build_approx(&fixture()).unwrap();
        let data = Dataset::from_features([sv(&[(1, 1.0)]), sv(&[(4, 1.0)])]);
        assert!(matches!(
            decide_approx_batch(&a, &data, false),
            Err(Error::Dimension {
                instance: 2,
                index: 4,
                dimension: 3
            })
        ));
    }

    #[test]
    fn poly_kernel_is_rejected() {
        let m = ExactModel::new(
            Kernel::Poly2 {
                gamma: 1.0,
                beta: 1.0,
            },
            0.0,
            vec![1.0],
            vec![sv(&[(1, 1.0)])],
            ModelKind::Regressor,
        )
        .unwrap();
        assert!(matches!(build_approx(&m), Err(Error::UnsupportedKernel(_))));
    }
}
