//! Instance files: one instance per line, values separated by commas and/or
//! whitespace. In labeled mode the first token is the class (`+1`, `1` or `-1`).
//! Blank lines and lines starting with `#` are skipped.

use std::fmt::Write;
use std::path::Path;

use super::{ClassLabel, FeatureVector};
use crate::error::{read_file, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub label: Option<ClassLabel>,
    pub features: FeatureVector,
}

fn label_token(line: usize, tok: &str) -> Result<ClassLabel> {
    match tok {
        "+1" | "1" | "+1.0" | "1.0" => Ok(ClassLabel::Positive),
        "-1" | "-1.0" => Ok(ClassLabel::Negative),
        _ => Err(Error::parse(line, format!("expected class label +1 or -1, found {tok:?}"))),
    }
}

pub fn parse_instance_file(bytes: &[u8], expected_dim: usize, labeled: bool) -> Result<Vec<Instance>> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::parse(1, "invalid UTF-8"))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty());
        let label = if labeled {
            let tok = tokens.next().unwrap_or("");
            Some(label_token(line, tok)?)
        } else {
            None
        };
        let mut values = Vec::with_capacity(expected_dim);
        for tok in tokens {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(line, format!("unparseable value {tok:?}")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite { line });
            }
            values.push(v);
        }
        if values.len() != expected_dim {
            return Err(Error::Dimension {
                expected: expected_dim,
                found: values.len(),
                context: Some(format!("line {line}")),
            });
        }
        let features = FeatureVector::new(values).map_err(|e| Error::parse(line, e.to_string()))?;
        out.push(Instance { label, features });
    }
    Ok(out)
}

pub fn load_instance_file(path: &Path, expected_dim: usize, labeled: bool) -> Result<Vec<Instance>> {
    let bytes = read_file(path)?;
    parse_instance_file(&bytes, expected_dim, labeled).map_err(|e| e.context(path.display().to_string()))
}

/// Writes instances comma-separated; labels are emitted when present.
pub fn serialize_instances(instances: &[Instance]) -> Vec<u8> {
    let mut out = String::new();
    for inst in instances {
        let mut first = true;
        if let Some(l) = inst.label {
            let _ = write!(out, "{l}");
            first = false;
        }
        for v in inst.features.values() {
            if !first {
                out.push_str(", ");
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_unlabeled_line() {
        let line: Vec<String> = (0..27).map(|i| format!("{}", i as f64 * 0.1)).collect();
        let text = line.join(" ");
        let v = parse_instance_file(text.as_bytes(), 27, false).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].label, None);
        assert_eq!(v[0].features.dimension(), 27);
    }

    #[test]
    fn labeled_line() {
        let v = parse_instance_file(b"+1, 0.1, 0.2\n", 2, true).unwrap();
        assert_eq!(v[0].label, Some(ClassLabel::Positive));
        assert_eq!(v[0].features.values(), &[0.1, 0.2]);
        let v = parse_instance_file(b"# header\n\n-1 3,4\n", 2, true).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].label, Some(ClassLabel::Negative));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_instance_file(b"1,2\n1,2,3\n", 2, false) {
            Err(Error::Dimension { expected: 2, found: 3, context: Some(c) }) => assert_eq!(c, "line 2"),
            r => panic!("{r:?}"),
        }
        assert!(matches!(parse_instance_file(b"1,x\n", 2, false), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_instance_file(b"0 1 2\n", 2, true), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_instance_file(b"1 inf\n", 2, false), Err(Error::NonFinite { line: 1 })));
    }

    #[test]
    fn empty_file() {
        assert!(parse_instance_file(b"", 3, true).unwrap().is_empty());
    }

    #[test]
    fn random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for labeled in [false, true] {
            let instances: Vec<Instance> = (0..50)
                .map(|_| Instance {
                    label: labeled.then(|| {
                        if rng.gen_bool(0.5) { ClassLabel::Positive } else { ClassLabel::Negative }
                    }),
                    features: FeatureVector::new((0..9).map(|_| rng.gen_range(-1e3..1e3)).collect())
                        .unwrap(),
                })
                .collect();
            let text = serialize_instances(&instances);
            assert_eq!(parse_instance_file(&text, 9, labeled).unwrap(), instances);
        }
    }
}
