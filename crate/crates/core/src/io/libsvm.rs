//! Readers for LIBSVM model files and sparse data files.
//!
//! Only two-class classifiers (`c_svc`, `nu_svc`) and regressors
//! (`epsilon_svr`, `nu_svr`) with an RBF or degree-2 polynomial kernel are
//! accepted. LIBSVM evaluates `sum_i coef_i k(x_i, z) - rho`, so the parsed
//! bias is `-rho`.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Dataset, ExactModel, Instance, Kernel, ModelKind};
use crate::sparse::SparseVector;

#[derive(Default)]
struct Header {
    svm_type: Option<String>,
    kernel_type: Option<String>,
    degree: Option<i64>,
    gamma: Option<f64>,
    coef0: Option<f64>,
    nr_class: Option<usize>,
    total_sv: Option<usize>,
    rho: Vec<f64>,
    labels: Vec<i32>,
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} {tok:?}")))
}

fn parse_real(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = parse_num(tok, line, what)?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite {what} {tok:?}")));
    }
    Ok(v)
}

fn single<'a>(rest: &[&'a str], key: &str, line: usize) -> Result<&'a str> {
    match rest {
        [one] => Ok(one),
        _ => Err(Error::parse(
            line,
            format!("`{key}` expects exactly one value"),
        )),
    }
}

/// Parses `idx:val` tokens into a sparse vector.
fn parse_features<'a>(tokens: impl Iterator<Item = &'a str>, line: usize) -> Result<SparseVector> {
    let mut entries = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| Error::parse(line, format!("expected index:value, got {tok:?}")))?;
        let idx: u32 = parse_num(idx, line, "feature index")?;
        let val = parse_real(val, line, "feature value")?;
        entries.push((idx, val));
    }
    SparseVector::new(entries).map_err(|e| Error::parse(line, e.to_string()))
}

/// Resolves the header into a kernel and model kind, rejecting what we
/// cannot approximate.
fn resolve(h: &Header, line: usize) -> Result<(Kernel, ModelKind, f64, usize)> {
    let svm_type = h
        .svm_type
        .as_deref()
        .ok_or_else(|| Error::parse(line, "missing svm_type"))?;
    let classifier = match svm_type {
        "c_svc" | "nu_svc" => true,
        "epsilon_svr" | "nu_svr" => false,
        "one_class" => {
            return Err(Error::UnsupportedModel(
                "one-class models are not supported".into(),
            ))
        }
        other => return Err(Error::parse(line, format!("unknown svm_type {other:?}"))),
    };
    let nr_class = h.nr_class.unwrap_or(2);
    if classifier && nr_class > 2 {
        return Err(Error::UnsupportedModel(format!(
            "{nr_class}-class model; multi-class (one-vs-one) models are out of scope, \
             train one binary model per class instead"
        )));
    }
    if classifier && nr_class < 2 {
        return Err(Error::UnsupportedModel(format!(
            "{nr_class}-class classifier"
        )));
    }

    let gamma = h.gamma.ok_or_else(|| Error::parse(line, "missing gamma"));
    let kernel = match h.kernel_type.as_deref() {
        Some("rbf") => {
            let gamma = gamma?;
            if gamma <= 0.0 {
                return Err(Error::parse(
                    line,
                    format!("RBF gamma must be positive, got {gamma}"),
                ));
            }
            Kernel::Rbf { gamma }
        }
        Some("polynomial") => match h.degree {
            Some(2) => Kernel::Poly2 {
                gamma: gamma?,
                beta: h.coef0.unwrap_or(0.0),
            },
            Some(d) => {
                return Err(Error::UnsupportedKernel(format!(
                    "polynomial of degree {d} (only degree 2 is supported)"
                )))
            }
            None => return Err(Error::parse(line, "polynomial kernel without degree")),
        },
        Some(other) => return Err(Error::UnsupportedKernel(other.to_string())),
        None => return Err(Error::parse(line, "missing kernel_type")),
    };

    let kind = if classifier {
        match h.labels[..] {
            [a, b] => ModelKind::BinaryClassifier { labels: (a, b) },
            _ => {
                return Err(Error::parse(
                    line,
                    "classifier needs a `label` line with two labels",
                ))
            }
        }
    } else {
        ModelKind::Regressor
    };
    let rho = match h.rho[..] {
        [rho] => rho,
        _ => return Err(Error::parse(line, "expected a single rho value")),
    };
    let total_sv = h
        .total_sv
        .ok_or_else(|| Error::parse(line, "missing total_sv"))?;
    Ok((kernel, kind, rho, total_sv))
}

/// Parses a LIBSVM model with an RBF or degree-2 polynomial kernel.
pub fn parse_libsvm_model(reader: impl BufRead) -> Result<ExactModel> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut h = Header::default();
    let mut sv_line = 0;

    for (n, line) in lines.by_ref() {
        let line = line.map_err(|e| Error::parse(n, e.to_string()))?;
        let mut toks = line.split_whitespace();
        let Some(key) = toks.next() else { continue };
        let rest: Vec<&str> = toks.collect();
        match key {
            "svm_type" => h.svm_type = Some(single(&rest, key, n)?.to_string()),
            "kernel_type" => h.kernel_type = Some(single(&rest, key, n)?.to_string()),
            "degree" => h.degree = Some(parse_num(single(&rest, key, n)?, n, key)?),
            "gamma" => h.gamma = Some(parse_real(single(&rest, key, n)?, n, key)?),
            "coef0" => h.coef0 = Some(parse_real(single(&rest, key, n)?, n, key)?),
            "nr_class" => h.nr_class = Some(parse_num(single(&rest, key, n)?, n, key)?),
            "total_sv" => h.total_sv = Some(parse_num(single(&rest, key, n)?, n, key)?),
            "rho" => {
                h.rho = rest
                    .iter()
                    .map(|t| parse_real(t, n, key))
                    .collect::<Result<_>>()?
            }
            "label" => {
                h.labels = rest
                    .iter()
                    .map(|t| parse_num(t, n, key))
                    .collect::<Result<_>>()?
            }
            // Class counts and probability calibration do not affect decision values.
            "nr_sv" | "probA" | "probB" | "prob_density_marks" => {}
            "SV" => {
                sv_line = n;
                break;
            }
            other => return Err(Error::parse(n, format!("unknown header field {other:?}"))),
        }
    }
    if sv_line == 0 {
        return Err(Error::parse(0, "missing `SV` section"));
    }
    let (kernel, kind, rho, total_sv) = resolve(&h, sv_line)?;

    let mut coefficients = Vec::with_capacity(total_sv);
    let mut support_vectors = Vec::with_capacity(total_sv);
    let mut last = sv_line;
    for (n, line) in lines {
        let line = line.map_err(|e| Error::parse(n, e.to_string()))?;
        last = n;
        let mut toks = line.split_whitespace();
        let Some(coef) = toks.next() else { continue };
        if support_vectors.len() == total_sv {
            return Err(Error::parse(
                n,
                format!("more support vectors than total_sv = {total_sv}"),
            ));
        }
        coefficients.push(parse_real(coef, n, "coefficient")?);
        support_vectors.push(parse_features(toks, n)?);
    }
    if support_vectors.len() != total_sv {
        return Err(Error::parse(
            last,
            format!(
                "total_sv = {total_sv} but found {} support vectors",
                support_vectors.len()
            ),
        ));
    }
    ExactModel::new(kernel, -rho, coefficients, support_vectors, kind)
        .map_err(|e| Error::parse(sv_line, e.to_string()))
}

/// Parses a LIBSVM model and requires an RBF kernel.
pub fn parse_exact_model(reader: impl BufRead) -> Result<ExactModel> {
    let model = parse_libsvm_model(reader)?;
    match model.kernel {
        Kernel::Rbf { .. } => Ok(model),
        Kernel::Poly2 { .. } => Err(Error::UnsupportedKernel("polynomial (expected rbf)".into())),
    }
}

/// Parses a LIBSVM model and requires a degree-2 polynomial kernel.
pub fn parse_poly2_model(reader: impl BufRead) -> Result<ExactModel> {
    let model = parse_libsvm_model(reader)?;
    match model.kernel {
        Kernel::Poly2 { .. } => Ok(model),
        Kernel::Rbf { .. } => Err(Error::UnsupportedKernel(
            "rbf (expected polynomial of degree 2)".into(),
        )),
    }
}

/// Parses LIBSVM sparse data: `<label> <idx>:<val> ...` per line.
/// Blank lines are skipped.
pub fn parse_dataset(reader: impl BufRead) -> Result<Dataset> {
    let mut instances = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::parse(n, e.to_string()))?;
        let mut toks = line.split_whitespace();
        let Some(label) = toks.next() else { continue };
        let label = parse_real(label, n, "label")?;
        let features = parse_features(toks, n)?;
        instances.push(Instance {
            label,
            features,
            line: n,
        });
    }
    Ok(Dataset::new(instances))
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufReader::new(file))
}

pub fn read_exact_model(path: impl AsRef<Path>) -> Result<ExactModel> {
    parse_exact_model(open(path.as_ref())?)
}

pub fn read_poly2_model(path: impl AsRef<Path>) -> Result<ExactModel> {
    parse_poly2_model(open(path.as_ref())?)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_dataset(open(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "svm_type c_svc\nkernel_type rbf\ngamma 0.5\nnr_class 2\n";

    fn model(text: &str) -> Result<ExactModel> {
        parse_exact_model(text.as_bytes())
    }

    #[test]
    fn single_sv_maps_fields() {
        let text = format!("{HEADER}total_sv 1\nrho 0.25\nlabel 1 -1\nnr_sv 1 0\nSV\n1.0 1:2.0\n");
        let m = model(&text).unwrap();
        assert_eq!(m.kernel, Kernel::Rbf { gamma: 0.5 });
        assert_eq!(m.bias, -0.25);
        assert_eq!(m.coefficients, vec![1.0]);
        assert_eq!(
            m.support_vectors,
            vec![SparseVector::new([(1, 2.0)]).unwrap()]
        );
        assert_eq!(m.dimension, 1);
        assert_eq!(m.kind, ModelKind::BinaryClassifier { labels: (1, -1) });
    }

    #[test]
    fn total_sv_mismatch() {
        let text = format!("{HEADER}total_sv 2\nrho 0\nlabel 1 -1\nSV\n1 1:1\n-1 1:2\n0.5 2:1\n");
        match model(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 11),
            other => panic!("{other:?}"),
        }
        let text = format!("{HEADER}total_sv 3\nrho 0\nlabel 1 -1\nSV\n1 1:1\n-1 1:2\n");
        assert!(matches!(model(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn linear_kernel_unsupported() {
        let text = "svm_type c_svc\nkernel_type linear\nnr_class 2\ntotal_sv 1\nrho 0\nlabel 1 -1\nSV\n1 1:1\n";
        assert!(matches!(model(text), Err(Error::UnsupportedKernel(_))));
    }

    #[test]
    fn multiclass_unsupported() {
        let text = "svm_type c_svc\nkernel_type rbf\ngamma 1\nnr_class 3\ntotal_sv 1\nrho 0 0 0\nlabel 1 2 3\nSV\n1 1 1:1\n";
        match model(text) {
            Err(Error::UnsupportedModel(msg)) => assert!(msg.contains("one-vs-one")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sv_line_errors_carry_line_number() {
        for bad in ["1 2:1 1:1", "1 1:nan", "x 1:1", "1 1-1", "1 0:1"] {
            let text = format!("{HEADER}total_sv 1\nrho 0\nlabel 1 -1\nSV\n{bad}\n");
            match model(&text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, 9, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    #[test]
    fn regressor_and_probability_fields() {
        let text = "svm_type epsilon_svr\nkernel_type rbf\ngamma 0.1\nnr_class 2\ntotal_sv 2\nrho -1.5\nprobA 0.3\nSV\n0.5 3:1\n-0.5 \n";
        let m = model(text).unwrap();
        assert_eq!(m.kind, ModelKind::Regressor);
        assert_eq!(m.bias, 1.5);
        assert_eq!(m.dimension, 3);
        assert!(m.support_vectors[1].is_empty());
    }

    #[test]
    fn poly2_through_same_parser() {
        let text = "svm_type c_svc\nkernel_type polynomial\ndegree 2\ngamma 0.5\ncoef0 1\nnr_class 2\ntotal_sv 1\nrho 0\nlabel 1 -1\nSV\n1 1:2\n";
        let m = parse_poly2_model(text.as_bytes()).unwrap();
        assert_eq!(
            m.kernel,
            Kernel::Poly2 {
                gamma: 0.5,
                beta: 1.0
            }
        );
        assert!(matches!(model(text), Err(Error::UnsupportedKernel(_))));
        let cubic = text.replace("degree 2", "degree 3");
        assert!(matches!(
            parse_poly2_model(cubic.as_bytes()),
            Err(Error::UnsupportedKernel(_))
        ));
    }

    #[test]
    fn dataset_lines() {
        let d = parse_dataset("+1 1:0.5 3:1.0\n".as_bytes()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.instances[0].label, 1.0);
        assert_eq!(d.instances[0].features.indices(), &[1, 3]);
        assert_eq!(d.dimension, 3);

        let d = parse_dataset("+1\n\n-1 2:1\n".as_bytes()).unwrap();
        assert!(d.instances[0].features.is_empty());
        assert_eq!(d.instances[1].line, 3);

        match parse_dataset("+1 1:1\nabc 1:1\n".as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
