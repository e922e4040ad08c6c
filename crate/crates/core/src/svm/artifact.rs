//! Canonical text form of a [`WeightArtifact`].
//!
//! ```text
//! svm-ac v1
//! name M
//! features 2
//! bias 0.25
//! 1.5
//! -2
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, lines end in LF and the
//! last line is terminated. Serialization of a parsed canonical file is
//! byte-identical to the input.

use std::fmt::Write;
use std::path::Path;

use super::WeightArtifact;
use crate::error::{read_file, Error, Result};

pub const MAGIC: &str = "svm-ac v1";

pub fn serialize_weight_artifact(w: &WeightArtifact) -> Vec<u8> {
    let mut out = String::with_capacity(32 + 24 * w.dimension());
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "name {}", w.name());
    let _ = writeln!(out, "features {}", w.dimension());
    let _ = writeln!(out, "bias {}", w.bias());
    for v in w.ac() {
        let _ = writeln!(out, "{v}");
    }
    out.into_bytes()
}

fn number(line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("expected number, found {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite { line });
    }
    Ok(v)
}

fn keyed<'a>(line: usize, text: Option<&'a str>, key: &str) -> Result<&'a str> {
    let text = text.ok_or_else(|| Error::parse(line, format!("missing `{key}` line")))?;
    match text.split_once(' ') {
        Some((k, v)) if k == key && !v.is_empty() => Ok(v),
        _ => Err(Error::parse(line, format!("expected `{key} <value>`, found {text:?}"))),
    }
}

/// Parses one artifact block from the start of `bytes`. Returns the artifact
/// and the number of lines consumed; trailing content is left to the caller.
pub(crate) fn parse_block(text: &str, first_line: usize) -> Result<(WeightArtifact, usize)> {
    let mut lines = text.split('\n');
    let ln = |k: usize| first_line + k;

    match lines.next() {
        Some(MAGIC) => {}
        other => {
            return Err(Error::parse(
                ln(0),
                format!("expected `{MAGIC}`, found {:?}", other.unwrap_or("")),
            ))
        }
    }
    let name = keyed(ln(1), lines.next(), "name")?.to_string();
    let features = keyed(ln(2), lines.next(), "features")?;
    let dim: usize = features
        .parse()
        .map_err(|_| Error::parse(ln(2), format!("bad feature count {features:?}")))?;
    if dim == 0 {
        return Err(Error::parse(ln(2), "feature count must be positive"));
    }
    let bias = number(ln(3), keyed(ln(3), lines.next(), "bias")?)?;

    let mut ac = Vec::with_capacity(dim);
    for k in 0..dim {
        match lines.next() {
            Some(l) if !l.is_empty() => ac.push(number(ln(4 + k), l)?),
            _ => {
                return Err(Error::Structural(format!(
                    "header declares {dim} features, body has {k}"
                )))
            }
        }
    }
    let w = WeightArtifact::new(name, ac, bias).map_err(|e| Error::parse(ln(1), e.to_string()))?;
    Ok((w, 4 + dim))
}

pub fn parse_weight_artifact(bytes: &[u8]) -> Result<WeightArtifact> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::parse(1, "invalid UTF-8"))?;
    let (w, used) = parse_block(text, 1)?;
    let rest: Vec<&str> = text.split('\n').skip(used).collect();
    // Canonical files end with a single LF, leaving one empty trailing piece.
    let extra = rest.iter().filter(|l| !l.trim().is_empty()).count();
    if extra > 0 {
        return Err(Error::Structural(format!(
            "header declares {} features, body has {}",
            w.dimension(),
            w.dimension() + extra
        )));
    }
    Ok(w)
}

pub fn load_weight_artifact(path: &Path) -> Result<WeightArtifact> {
    let bytes = read_file(path)?;
    parse_weight_artifact(&bytes).map_err(|e| e.context(path.display().to_string()))
}
