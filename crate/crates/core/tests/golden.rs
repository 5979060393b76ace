//! Decision values of models trained and evaluated by LIBSVM itself
//! (fixtures regenerated by `tests/fixtures/gen_golden.py`).

use std::path::PathBuf;

use approxsvm::bench::compare;
use approxsvm::exact::decide_exact_batch;
use approxsvm::io::{read_dataset, read_exact_model, read_poly2_model};
use approxsvm::poly2::expand_poly2;
use approxsvm::{build_approx, decide_approx_batch, Dataset, ModelKind};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn test_data() -> Dataset {
    read_dataset(fixture("test.svm")).unwrap()
}

/// `(label, decision value)` rows; regression files carry only the value.
fn expected(name: &str) -> Vec<(f64, Option<f64>)> {
    std::fs::read_to_string(fixture(name))
        .unwrap()
        .lines()
        .map(|l| {
            let mut toks = l.split_whitespace().map(|t| t.parse::<f64>().unwrap());
            (toks.next().unwrap(), toks.next())
        })
        .collect()
}

#[test]
fn rbf_classifier_matches_libsvm() {
    let model = read_exact_model(fixture("rbf_csvc.model")).unwrap();
    assert_eq!(model.n_sv(), 58);
    assert_eq!(model.kind, ModelKind::BinaryClassifier { labels: (1, -1) });
    let data = test_data();
    assert!(data.instances.iter().any(|i| i.features.is_empty()));
    let got = decide_exact_batch(&model, &data).unwrap();
    let want = expected("rbf_csvc.expected");
    assert_eq!(got.len(), want.len());
    for (i, (g, (label, value))) in got.iter().zip(&want).enumerate() {
        assert_eq!(g.label.map(f64::from), Some(*label), "instance {i}");
        let value = value.unwrap();
        assert!(
            (g.value - value).abs() < 1e-12 * value.abs().max(1.0),
            "instance {i}"
        );
    }
}

#[test]
fn rbf_regressor_matches_libsvm() {
    let model = read_exact_model(fixture("rbf_epsvr.model")).unwrap();
    assert_eq!(model.kind, ModelKind::Regressor);
    let got = decide_exact_batch(&model, &test_data()).unwrap();
    for (g, (value, _)) in got.iter().zip(expected("rbf_epsvr.expected")) {
        assert!(g.label.is_none());
        assert!((g.value - value).abs() < 1e-12 * value.abs().max(1.0));
    }
}

#[test]
fn poly2_classifier_matches_libsvm_both_ways() {
    let model = read_poly2_model(fixture("poly2_csvc.model")).unwrap();
    let expansion = expand_poly2(&model).unwrap();
    let data = test_data();
    let kernel_sums = decide_exact_batch(&model, &data).unwrap();
    for ((inst, k), (label, value)) in data
        .instances
        .iter()
        .zip(&kernel_sums)
        .zip(expected("poly2_csvc.expected"))
    {
        let value = value.unwrap();
        let e = expansion.decide(&inst.features).unwrap();
        assert_eq!(k.label.map(f64::from), Some(label));
        assert_eq!(e.label.map(f64::from), Some(label));
        assert!((k.value - value).abs() < 1e-12 * value.abs().max(1.0));
        assert!((e.value - value).abs() < 1e-10 * value.abs().max(1.0));
    }
}

#[test]
fn approximation_of_libsvm_model_is_consistent() {
    let model = read_exact_model(fixture("rbf_csvc.model")).unwrap();
    let data = test_data();
    let report = compare(&model, &data).unwrap();
    assert_eq!(report.n_test, data.len());
    assert!(report.n_label_diff <= report.n_test);

    // The empty instance sits at the origin, where the approximation is exact.
    let approx = build_approx(&model).unwrap();
    let preds = decide_approx_batch(&approx, &data, true).unwrap();
    let origin = data
        .instances
        .iter()
        .position(|i| i.features.is_empty())
        .unwrap();
    let row = &report.rows[origin];
    assert!((row.exact.value - row.approx.value).abs() < 1e-12);
    assert_eq!(preds[origin].bound_ok, Some(true));
}
