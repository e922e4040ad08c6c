//! SVM-Light compatible model files (linear kernel only).
//!
//! Header layout, one value per line with an optional `#` comment:
//!
//! ```text
//! SVM-light Version V6.02
//! 0 # kernel type
//! 3 # kernel parameter -d
//! 1 # kernel parameter -g
//! 1 # kernel parameter -s
//! 1 # kernel parameter -r
//! 3 # highest feature index
//! 10 # number of training documents
//! 2 # number of support vectors plus 1
//! 0.5 # threshold b, each following line is a SV (starting with alpha*y)
//! 1 1:0.1 2:0.2 3:0.3 #
//! ```
//!
//! Files written by SVM-Light 6 carry a fifth kernel parameter line
//! (`empty # kernel parameter -u`); it is recognised by its comment and skipped.

use std::path::Path;

use super::{FeatureVector, SupportVector, SvmModel};
use crate::error::{read_file, Error, Result};

const VERSION_LINE: &str = "SVM-light Version V6.02";

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next header line split into (value, comment).
    fn header(&mut self, what: &str) -> Result<(usize, &'a str, &'a str)> {
        let (i, raw) = self
            .inner
            .next()
            .ok_or_else(|| Error::parse(self.last + 1, format!("missing {what}")))?;
        self.last = i + 1;
        let (value, comment) = match raw.find('#') {
            Some(p) => (&raw[..p], &raw[p + 1..]),
            None => (raw, ""),
        };
        Ok((i + 1, value.trim(), comment.trim()))
    }
}

fn header_int(line: usize, value: &str, what: &str) -> Result<i64> {
    value
        .parse::<i64>()
        .map_err(|_| Error::parse(line, format!("expected integer {what}, found {value:?}")))
}

fn finite(line: usize, token: &str, what: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| Error::parse(line, format!("expected number for {what}, found {token:?}")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite { line });
    }
    Ok(v)
}

/// Parses a model file. The returned model is named `model`; rename it with
/// [`SvmModel::with_name`].
pub fn parse_model_file(bytes: &[u8]) -> Result<SvmModel> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(line, "invalid UTF-8")
    })?;
    let mut lines = Lines::new(text);

    lines.header("version line")?;
    let (ln, kernel, _) = lines.header("kernel type")?;
    let kernel = header_int(ln, kernel, "kernel type")?;
    if kernel != 0 {
        return Err(Error::UnsupportedKernel(kernel));
    }
    for _ in 0..4 {
        let (ln, v, _) = lines.header("kernel parameter")?;
        finite(ln, v, "kernel parameter")?;
    }
    let (mut ln, mut v, comment) = lines.header("highest feature index")?;
    if comment.contains("kernel parameter") {
        (ln, v, _) = lines.header("highest feature index")?;
    }
    let dimension = header_int(ln, v, "highest feature index")?;
    if dimension <= 0 {
        return Err(Error::parse(ln, "highest feature index must be positive"));
    }
    let dimension = dimension as usize;

    let (ln, v, _) = lines.header("number of training documents")?;
    header_int(ln, v, "number of training documents")?;
    let (ln, v, _) = lines.header("number of support vectors")?;
    let declared = header_int(ln, v, "number of support vectors plus 1")?;
    if declared < 1 {
        return Err(Error::parse(ln, "number of support vectors plus 1 must be at least 1"));
    }
    let (ln, v, _) = lines.header("threshold")?;
    let bias = finite(ln, v, "threshold")?;

    let mut svs = Vec::new();
    for (i, raw) in lines.inner {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_ascii_whitespace();
        let coefficient = finite(line, tokens.next().unwrap_or(""), "alpha*y")?;
        if coefficient == 0.0 {
            return Err(Error::parse(line, "support vector coefficient is zero"));
        }
        let mut dense = vec![0.0; dimension];
        let mut prev = 0usize;
        for tok in tokens {
            if tok.starts_with("qid:") || tok.starts_with("sid:") || tok.starts_with("cost:") {
                continue;
            }
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(line, format!("expected index:value, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(line, format!("bad feature index {idx:?}")))?;
            if idx == 0 || idx <= prev {
                return Err(Error::parse(
                    line,
                    format!("feature indices must be 1-based and ascending (found {idx} after {prev})"),
                ));
            }
            if idx > dimension {
                return Err(Error::parse(
                    line,
                    format!("feature index {idx} exceeds declared dimension {dimension}"),
                ));
            }
            dense[idx - 1] = finite(line, val, "feature value")?;
            prev = idx;
        }
        let features = FeatureVector::new(dense).map_err(|e| Error::parse(line, e.to_string()))?;
        svs.push(SupportVector::new(coefficient, features)?);
    }

    if svs.is_empty() {
        return Err(Error::Structural("model file contains no support vectors".into()));
    }
    if svs.len() as i64 != declared - 1 {
        return Err(Error::Structural(format!(
            "header declares {} support vectors, file contains {}",
            declared - 1,
            svs.len()
        )));
    }
    SvmModel::new("model", dimension, bias, svs)
}

/// Loads a model file and names the model after the file stem.
pub fn load_model_file(path: &Path) -> Result<SvmModel> {
    let bytes = read_file(path)?;
    let model = parse_model_file(&bytes).map_err(|e| e.context(path.display().to_string()))?;
    match path.file_stem().and_then(|s| s.to_str()) {
        Some(stem) => model.clone().with_name(stem).or(Ok(model)),
        None => Ok(model),
    }
}

pub fn serialize_model_file(model: &SvmModel) -> Vec<u8> {
    use std::fmt::Write;
    let n = model.support_vectors().len();
    let mut out = String::new();
    let _ = writeln!(out, "{VERSION_LINE}");
    out.push_str("0 # kernel type\n");
    out.push_str("3 # kernel parameter -d\n");
    out.push_str("1 # kernel parameter -g\n");
    out.push_str("1 # kernel parameter -s\n");
    out.push_str("1 # kernel parameter -r\n");
    let _ = writeln!(out, "{} # highest feature index", model.dimension());
    let _ = writeln!(out, "{n} # number of training documents");
    let _ = writeln!(out, "{} # number of support vectors plus 1", n + 1);
    let _ = writeln!(
        out,
        "{} # threshold b, each following line is a SV (starting with alpha*y)",
        model.bias()
    );
    for sv in model.support_vectors() {
        let _ = write!(out, "{}", sv.coefficient);
        for (j, v) in sv.features.values().iter().enumerate() {
            if *v != 0.0 {
                let _ = write!(out, " {}:{}", j + 1, v);
            }
        }
        out.push_str(" #\n");
    }
    out.into_bytes()
}
