//! Exact-vs-approximate comparison, prediction timing and model sizes.
//!
//! Reports print as `key: value` lines; the per-instance and per-repetition
//! detail is available as CSV.

use std::fmt;
use std::hint::black_box;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::approx::{
    build_approx_with, decide_approx_batch_par, decide_approx_batch_with, ApproxModel, DenseLoops,
    DenseMath, SparseLoops,
};
use crate::error::{Error, Result};
use crate::exact::{decide_exact_batch, DecisionValue};
use crate::model::{Dataset, ExactModel};

/// Relative deltas are only taken where `|f(z)|` exceeds this.
pub const REL_DELTA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub line: usize,
    pub exact: DecisionValue,
    pub approx: DecisionValue,
    pub bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub n_test: usize,
    pub n_label_diff: usize,
    pub max_abs_decision_delta: f64,
    pub max_rel_decision_delta: f64,
    pub n_bound_violations: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn diff_fraction(&self) -> f64 {
        if self.n_test == 0 {
            0.0
        } else {
            self.n_label_diff as f64 / self.n_test as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("line,exact_label,approx_label,exact_value,approx_value,bound_ok\n");
        let label = |d: &DecisionValue| d.label.map_or(String::new(), |l| l.to_string());
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:?},{:?},{}\n",
                r.line,
                label(&r.exact),
                label(&r.approx),
                r.exact.value,
                r.approx.value,
                r.bound_ok
            ));
        }
        out
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_test: {}", self.n_test)?;
        writeln!(f, "n_label_diff: {}", self.n_label_diff)?;
        writeln!(f, "diff_percent: {:.4}", 100.0 * self.diff_fraction())?;
        writeln!(
            f,
            "max_abs_decision_delta: {:e}",
            self.max_abs_decision_delta
        )?;
        writeln!(
            f,
            "max_rel_decision_delta: {:e}",
            self.max_rel_decision_delta
        )?;
        writeln!(f, "n_bound_violations: {}", self.n_bound_violations)
    }
}

/// Approximates `model` and compares both predictors on every instance.
pub fn compare(model: &ExactModel, data: &Dataset) -> Result<ComparisonReport> {
    let approx = build_approx_with(model, &SparseLoops)?;
    compare_with(model, &approx, data)
}

pub fn compare_with(
    model: &ExactModel,
    approx: &ApproxModel,
    data: &Dataset,
) -> Result<ComparisonReport> {
    let exact = decide_exact_batch(model, data)?;
    let approximate = decide_approx_batch_with(approx, data, true, &SparseLoops)?;
    let mut report = ComparisonReport {
        n_test: data.len(),
        n_label_diff: 0,
        max_abs_decision_delta: 0.0,
        max_rel_decision_delta: 0.0,
        n_bound_violations: 0,
        rows: Vec::with_capacity(data.len()),
    };
    for ((inst, e), a) in data.instances.iter().zip(exact).zip(approximate) {
        let bound_ok = a.bound_ok.unwrap_or(true);
        let a = a.decision;
        if e.label != a.label {
            report.n_label_diff += 1;
        }
        if !bound_ok {
            report.n_bound_violations += 1;
        }
        let delta = (e.value - a.value).abs();
        report.max_abs_decision_delta = report.max_abs_decision_delta.max(delta);
        if e.value.abs() > REL_DELTA_FLOOR {
            report.max_rel_decision_delta =
                report.max_rel_decision_delta.max(delta / e.value.abs());
        }
        report.rows.push(ComparisonRow {
            line: inst.line,
            exact: e,
            approx: a,
            bound_ok,
        });
    }
    Ok(report)
}

/// Which [`DenseMath`] implementation to time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    SparseLoops,
    DenseLoops,
}

impl Backend {
    pub fn math(&self) -> &'static dyn DenseMath {
        match self {
            Backend::SparseLoops => &SparseLoops,
            Backend::DenseLoops => &DenseLoops,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingOptions {
    pub repetitions: usize,
    pub backend: Backend,
    /// Predict on the rayon pool instead of a single thread.
    pub parallel: bool,
}

impl Default for TimingOptions {
    fn default() -> Self {
        Self {
            repetitions: 5,
            backend: Backend::SparseLoops,
            parallel: false,
        }
    }
}

/// Median time per phase over the repetitions, with the per-repetition
/// standard deviation as spread.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub t_approx: Duration,
    pub t_pred_exact: Duration,
    pub t_pred_approx: Duration,
    pub spread_approx: Duration,
    pub spread_pred_exact: Duration,
    pub spread_pred_approx: Duration,
    pub repetitions: usize,
    pub n_instances: usize,
    pub backend: &'static str,
    pub parallel: bool,
    /// `(build, exact, approx)` per repetition.
    pub samples: Vec<(Duration, Duration, Duration)>,
    /// Sum of all decision values produced, so the timed work is observable.
    pub checksum: f64,
}

impl TimingReport {
    /// Exact over approximate prediction time.
    pub fn ratio1(&self) -> f64 {
        self.t_pred_exact.as_secs_f64() / self.t_pred_approx.as_secs_f64()
    }

    /// Same, but charging the approximation its one-off build time.
    pub fn ratio2(&self) -> f64 {
        self.t_pred_exact.as_secs_f64() / (self.t_pred_approx + self.t_approx).as_secs_f64()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("repetition,t_approx_s,t_pred_exact_s,t_pred_approx_s\n");
        for (i, (b, e, a)) in self.samples.iter().enumerate() {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                i + 1,
                b.as_secs_f64(),
                e.as_secs_f64(),
                a.as_secs_f64()
            ));
        }
        out
    }
}

impl fmt::Display for TimingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instances: {}", self.n_instances)?;
        writeln!(f, "repetitions: {}", self.repetitions)?;
        writeln!(f, "backend: {}", self.backend)?;
        writeln!(f, "parallel: {}", self.parallel)?;
        let secs = |d: Duration| d.as_secs_f64();
        writeln!(
            f,
            "t_approx_s: {:.6e} +- {:.1e}",
            secs(self.t_approx),
            secs(self.spread_approx)
        )?;
        writeln!(
            f,
            "t_pred_exact_s: {:.6e} +- {:.1e}",
            secs(self.t_pred_exact),
            secs(self.spread_pred_exact)
        )?;
        writeln!(
            f,
            "t_pred_approx_s: {:.6e} +- {:.1e}",
            secs(self.t_pred_approx),
            secs(self.spread_pred_approx)
        )?;
        writeln!(f, "ratio1: {:.3}", self.ratio1())?;
        writeln!(f, "ratio2: {:.3}", self.ratio2())?;
        writeln!(f, "checksum: {:e}", self.checksum)
    }
}

fn timed<T>(work: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = black_box(work());
    (out, start.elapsed().max(Duration::from_nanos(1)))
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

fn std_dev(xs: &[Duration]) -> Duration {
    let n = xs.len() as f64;
    let mean = xs.iter().map(Duration::as_secs_f64).sum::<f64>() / n;
    let var = xs
        .iter()
        .map(|d| (d.as_secs_f64() - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    Duration::from_secs_f64(var.sqrt())
}

pub fn time_prediction(
    model: &ExactModel,
    data: &Dataset,
    repetitions: usize,
) -> Result<TimingReport> {
    time_prediction_with(
        model,
        data,
        &TimingOptions {
            repetitions,
            ..Default::default()
        },
    )
}

/// Times approximation build, exact batch prediction and approximate batch
/// prediction on in-memory data; no file I/O happens inside a timed region.
pub fn time_prediction_with(
    model: &ExactModel,
    data: &Dataset,
    opts: &TimingOptions,
) -> Result<TimingReport> {
    if opts.repetitions < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 repetitions, got {}",
            opts.repetitions
        )));
    }
    data.check_dimension(model.dimension)?;
    let math = opts.backend.math();
    let sum = |ds: &mut dyn Iterator<Item = f64>| ds.sum::<f64>();

    let mut samples = Vec::with_capacity(opts.repetitions);
    let mut checksum = 0.0;
    for _ in 0..opts.repetitions {
        let (approx, t_build) = timed(|| build_approx_with(model, math));
        let approx = approx?;

        let (exact_sum, t_exact) = timed(|| -> Result<f64> {
            if opts.parallel {
                Ok(data
                    .instances
                    .par_iter()
                    .map(|inst| {
                        let d = crate::exact::decide_exact(model, &inst.features);
                        d.map(|d| d.value).unwrap_or(f64::NAN)
                    })
                    .sum())
            } else {
                Ok(sum(&mut decide_exact_batch(model, data)?
                    .iter()
                    .map(|d| d.value)))
            }
        });

        let (approx_sum, t_pred) = timed(|| -> Result<f64> {
            let preds = if opts.parallel {
                decide_approx_batch_par(&approx, data, true)?
            } else {
                decide_approx_batch_with(&approx, data, true, math)?
            };
            Ok(sum(&mut preds.iter().map(|p| p.decision.value)))
        });

        checksum += black_box(exact_sum?) + black_box(approx_sum?);
        samples.push((t_build, t_exact, t_pred));
    }

    let column = |f: fn(&(Duration, Duration, Duration)) -> Duration| -> Vec<Duration> {
        samples.iter().map(f).collect()
    };
    let (builds, exacts, approxes) = (column(|s| s.0), column(|s| s.1), column(|s| s.2));
    Ok(TimingReport {
        t_approx: median(builds.clone()),
        t_pred_exact: median(exacts.clone()),
        t_pred_approx: median(approxes.clone()),
        spread_approx: std_dev(&builds),
        spread_pred_exact: std_dev(&exacts),
        spread_pred_approx: std_dev(&approxes),
        repetitions: opts.repetitions,
        n_instances: data.len(),
        backend: math.name(),
        parallel: opts.parallel,
        samples,
        checksum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeReport {
    pub exact_bytes: u64,
    pub approx_bytes: u64,
}

impl SizeReport {
    /// `exact_bytes / approx_bytes`
    pub fn ratio(&self) -> f64 {
        self.exact_bytes as f64 / self.approx_bytes as f64
    }
}

impl fmt::Display for SizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "exact_bytes: {}", self.exact_bytes)?;
        writeln!(f, "approx_bytes: {}", self.approx_bytes)?;
        writeln!(f, "ratio: {:.3}", self.ratio())
    }
}

pub fn size_report(
    exact_file: impl AsRef<Path>,
    approx_file: impl AsRef<Path>,
) -> Result<SizeReport> {
    let len = |p: &Path| {
        std::fs::metadata(p)
            .map(|m| m.len())
            .map_err(|e| Error::io(p, e))
    };
    Ok(SizeReport {
        exact_bytes: len(exact_file.as_ref())?,
        approx_bytes: len(approx_file.as_ref())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Kernel, ModelKind};
    use crate::sparse::SparseVector;
    use crate::synth::{gaussian_clusters, random_rbf_classifier, ClusterConfig};

    #[test]
    fn origin_model_compares_exactly() {
        let m = ExactModel::new(
            Kernel::Rbf { gamma: 0.5 },
            -0.3,
            vec![1.0, -0.2],
            vec![SparseVector::zero(), SparseVector::zero()],
            ModelKind::BinaryClassifier { labels: (1, -1) },
        )
        .unwrap()
        .with_dimension(4)
        .unwrap();
        let data = gaussian_clusters(&ClusterConfig {
            dim: 4,
            n: 50,
            seed: 1,
            ..Default::default()
        });
        let r = compare(&m, &data).unwrap();
        assert_eq!(r.n_test, 50);
        assert_eq!(r.diff_fraction(), 0.0);
        assert!(r.max_abs_decision_delta < 1e-15);
        assert_eq!(r.n_bound_violations, 0);
        assert_eq!(r.to_csv().lines().count(), 51);
    }

    #[test]
    fn counts_are_consistent() {
        let data = gaussian_clusters(&ClusterConfig {
            dim: 6,
            n: 300,
            seed: 9,
            ..Default::default()
        });
        // far beyond the bound, so labels and bounds both disagree somewhere
        let m = random_rbf_classifier(&data, 60, 0.5, 1).unwrap();
        let r = compare(&m, &data).unwrap();
        assert!(r.n_label_diff <= r.n_test);
        assert!(r.n_bound_violations > 0);
        assert!((0.0..=1.0).contains(&r.diff_fraction()));
        let text = r.to_string();
        assert!(text.contains("n_test: 300"));
    }

    #[test]
    fn timing_shape() {
        let data = gaussian_clusters(&ClusterConfig {
            dim: 8,
            n: 50,
            seed: 3,
            ..Default::default()
        });
        let m = random_rbf_classifier(&data, 40, 0.01, 2).unwrap();
        let t = time_prediction(&m, &data, 3).unwrap();
        assert_eq!(t.samples.len(), 3);
        assert!(t.ratio2() < t.ratio1());
        assert!(t.checksum.is_finite());
        assert_eq!(t.to_csv().lines().count(), 4);
        assert!(matches!(
            time_prediction(&m, &data, 2),
            Err(Error::InvalidArgument(_))
        ));
        let par = time_prediction_with(
            &m,
            &data,
            &TimingOptions {
                repetitions: 3,
                backend: Backend::DenseLoops,
                parallel: true,
            },
        )
        .unwrap();
        assert_eq!(par.backend, "dense-loops");
        assert!((par.checksum - t.checksum).abs() < 1e-9 * t.checksum.abs().max(1.0));
    }

    #[test]
    fn size_of_same_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(size_report(&p, &p).unwrap().ratio(), 1.0);
        assert!(matches!(
            size_report(dir.path().join("nope"), &p),
            Err(Error::Io { .. })
        ));
    }
}
