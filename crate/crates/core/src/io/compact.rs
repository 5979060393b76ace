//! Text format for [`ApproxModel`]:
//!
//! ```text
//! approxsvm-model v1
//! kind <binary-classifier|regressor>
//! labels <l1> <l2>          (classifier only)
//! d <int>
//! gamma <real>
//! b <real>
//! c <real>
//! max_sv_norm_sq <real>
//! v <d reals>
//! M <d(d+1)/2 reals, upper triangle row-major>
//! ```
//!
//! Reals are written in shortest round-trip form, so parsing a written model
//! reproduces it bit for bit.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::approx::{packed_len, ApproxModel, SymMatrix};
use crate::error::{Error, Result};
use crate::model::ModelKind;

pub const MAGIC: &str = "approxsvm-model";
pub const VERSION: &str = "v1";

fn push_reals(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        write!(out, " {v:?}").unwrap();
    }
    out.push('\n');
}

pub fn write_approx_model(model: &ApproxModel) -> String {
    let d = model.dimension();
    let mut out = String::with_capacity(24 * (d + packed_len(d)) + 128);
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "kind {}", model.kind.name()).unwrap();
    if let ModelKind::BinaryClassifier { labels: (a, b) } = model.kind {
        writeln!(out, "labels {a} {b}").unwrap();
    }
    writeln!(out, "d {d}").unwrap();
    writeln!(out, "gamma {:?}", model.gamma).unwrap();
    writeln!(out, "b {:?}", model.bias).unwrap();
    writeln!(out, "c {:?}", model.c).unwrap();
    writeln!(out, "max_sv_norm_sq {:?}", model.max_sv_norm_sq).unwrap();
    push_reals(&mut out, "v", &model.v);
    push_reals(&mut out, "M", model.m.packed());
    out
}

pub fn save_approx_model(model: &ApproxModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_approx_model(model)).map_err(|e| Error::io(path, e))
}

/// Line cursor that skips blank lines and expects keys in a fixed order.
struct Lines<R> {
    inner: std::iter::Enumerate<std::io::Lines<R>>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        for (i, line) in self.inner.by_ref() {
            self.line = i + 1;
            let line = line.map_err(|e| Error::parse(self.line, e.to_string()))?;
            if !line.trim().is_empty() {
                return Ok(Some(line));
            }
        }
        Ok(None)
    }

    /// Returns the whitespace-separated values after `key`.
    fn field(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self
            .next_line()?
            .ok_or_else(|| Error::parse(self.line, format!("missing `{key}` line")))?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some(k) if k == key => Ok(toks.map(str::to_owned).collect()),
            other => Err(Error::parse(
                self.line,
                format!("expected `{key}`, found {:?}", other.unwrap_or("")),
            )),
        }
    }

    fn one(&mut self, key: &str) -> Result<String> {
        let mut vals = self.field(key)?;
        if vals.len() != 1 {
            return Err(Error::parse(
                self.line,
                format!("`{key}` expects one value"),
            ));
        }
        Ok(vals.pop().unwrap())
    }

    fn real(&self, tok: &str, key: &str) -> Result<f64> {
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(
                self.line,
                format!("invalid `{key}` value {tok:?}"),
            )),
        }
    }

    fn one_real(&mut self, key: &str) -> Result<f64> {
        let tok = self.one(key)?;
        self.real(&tok, key)
    }

    fn reals(&mut self, key: &str, expected: usize) -> Result<Vec<f64>> {
        let toks = self.field(key)?;
        if toks.len() != expected {
            return Err(Error::parse(
                self.line,
                format!(
                    "`{key}` needs {expected} values for the declared d, found {}",
                    toks.len()
                ),
            ));
        }
        toks.iter().map(|t| self.real(t, key)).collect()
    }
}

pub fn parse_approx_model(reader: impl BufRead) -> Result<ApproxModel> {
    let mut lines = Lines {
        inner: reader.lines().enumerate(),
        line: 0,
    };
    let first = lines
        .next_line()?
        .ok_or_else(|| Error::parse(0, "empty model file"))?;
    let mut toks = first.split_whitespace();
    if toks.next() != Some(MAGIC) {
        return Err(Error::parse(lines.line, format!("not an {MAGIC} file")));
    }
    match toks.next() {
        Some(VERSION) if toks.next().is_none() => {}
        other => return Err(Error::Version(other.unwrap_or("").to_string())),
    }

    let kind = match lines.one("kind")?.as_str() {
        "binary-classifier" => {
            let labels = lines.field("labels")?;
            let parsed: Vec<i32> = labels
                .iter()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(lines.line, "invalid label"))?;
            match parsed[..] {
                [a, b] => ModelKind::BinaryClassifier { labels: (a, b) },
                _ => return Err(Error::parse(lines.line, "`labels` expects two labels")),
            }
        }
        "regressor" => ModelKind::Regressor,
        other => return Err(Error::parse(lines.line, format!("unknown kind {other:?}"))),
    };
    let d_tok = lines.one("d")?;
    let d: usize = d_tok
        .parse()
        .map_err(|_| Error::parse(lines.line, format!("invalid `d` value {d_tok:?}")))?;
    let gamma = lines.one_real("gamma")?;
    if gamma <= 0.0 {
        return Err(Error::parse(lines.line, "gamma must be positive"));
    }
    let bias = lines.one_real("b")?;
    let c = lines.one_real("c")?;
    let max_sv_norm_sq = lines.one_real("max_sv_norm_sq")?;
    if max_sv_norm_sq < 0.0 {
        return Err(Error::parse(
            lines.line,
            "max_sv_norm_sq must be non-negative",
        ));
    }
    let v = lines.reals("v", d)?;
    let packed = lines.reals("M", packed_len(d))?;
    if let Some(extra) = lines.next_line()? {
        return Err(Error::parse(
            lines.line,
            format!("unexpected trailing line {extra:?}"),
        ));
    }
    Ok(ApproxModel {
        gamma,
        bias,
        c,
        v,
        m: SymMatrix::from_packed(d, packed).expect("length checked"),
        max_sv_norm_sq,
        kind,
    })
}

pub fn read_approx_model(path: impl AsRef<Path>) -> Result<ApproxModel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_approx_model(std::io::BufReader::new(file))
}
