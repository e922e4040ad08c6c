//! Configuration artifacts and the ports that load them.
//!
//! Bitstreams here are a canonical text stand-in for vendor binaries:
//!
//! ```text
//! bitstream v1
//! kind partial
//! target rp0
//! rm M
//! size_bits 297200
//! footprint 743 629 2 1 5
//!
//! svm-ac v1
//! ...
//! ```
//!
//! The trailing block is the module's weight artifact. `size_bits` is not free:
//! it must agree with the [`SizeModel`] for the kind and footprint.

use std::fmt::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Device, ResourceFootprint};
use crate::error::{Error, Result};
use crate::svm::artifact::parse_block;
use crate::svm::{serialize_weight_artifact, validate_name, WeightArtifact};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitstreamKind {
    Full,
    Partial,
}

impl fmt::Display for BitstreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BitstreamKind::Full => "full",
            BitstreamKind::Partial => "partial",
        })
    }
}

/// Bits of configuration data per slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeModel {
    pub bits_per_slice_full: u64,
    pub bits_per_slice_partial: u64,
}

impl Default for SizeModel {
    fn default() -> Self {
        SizeModel {
            bits_per_slice_full: 400,
            bits_per_slice_partial: 400,
        }
    }
}

impl SizeModel {
    /// A full bitstream programs the whole device.
    pub fn full_bits(&self, device: &Device) -> u64 {
        self.bits_per_slice_full * device.capacity.slices
    }

    /// A partial bitstream covers only the partition's allocation.
    pub fn partial_bits(&self, partition: &ResourceFootprint) -> u64 {
        self.bits_per_slice_partial * partition.slices
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    pub kind: BitstreamKind,
    /// Device name for full bitstreams, partition id for partial ones.
    pub target: String,
    pub rm_name: String,
    pub size_bits: u64,
    /// Full: static region plus partition. Partial: partition allocation.
    pub footprint: ResourceFootprint,
    pub weights: WeightArtifact,
}

impl Bitstream {
    /// Canonical serialized module carried by the bitstream.
    pub fn payload(&self) -> Vec<u8> {
        serialize_weight_artifact(&self.weights)
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = String::new();
        let _ = writeln!(out, "bitstream v1");
        let _ = writeln!(out, "kind {}", self.kind);
        let _ = writeln!(out, "target {}", self.target);
        let _ = writeln!(out, "rm {}", self.rm_name);
        let _ = writeln!(out, "size_bits {}", self.size_bits);
        let _ = writeln!(out, "footprint {}", self.footprint);
        out.push('\n');
        let mut bytes = out.into_bytes();
        bytes.extend_from_slice(&self.payload());
        bytes
    }

    /// Parses a bitstream and checks `size_bits` against the size model.
    pub fn parse(bytes: &[u8], sizes: &SizeModel, device: &Device) -> Result<Bitstream> {
        let text = std::str::from_utf8(bytes).map_err(|_| Error::parse(1, "invalid UTF-8"))?;
        let mut lines = text.split('\n');
        let mut field = |n: usize, key: &str| -> Result<&str> {
            let l = lines
                .next()
                .ok_or_else(|| Error::parse(n, format!("missing `{key}` line")))?;
            if key == "bitstream" {
                return if l == "bitstream v1" {
                    Ok("")
                } else {
                    Err(Error::parse(n, format!("expected `bitstream v1`, found {l:?}")))
                };
            }
            match l.split_once(' ') {
                Some((k, v)) if k == key && !v.is_empty() => Ok(v),
                _ => Err(Error::parse(n, format!("expected `{key} <value>`, found {l:?}"))),
            }
        };
        field(1, "bitstream")?;
        let kind = match field(2, "kind")? {
            "full" => BitstreamKind::Full,
            "partial" => BitstreamKind::Partial,
            k => return Err(Error::parse(2, format!("unknown bitstream kind {k:?}"))),
        };
        let target = field(3, "target")?.to_string();
        let rm_name = field(4, "rm")?.to_string();
        let size = field(5, "size_bits")?;
        let size_bits = u64::from_str(size).map_err(|_| Error::parse(5, format!("bad size {size:?}")))?;
        let fp = field(6, "footprint")?;
        let counts: Vec<u64> = fp
            .split(' ')
            .map(u64::from_str)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(6, format!("bad footprint {fp:?}")))?;
        let footprint = match counts[..] {
            [a, b, c, d, e] => ResourceFootprint::new(a, b, c, d, e),
            _ => return Err(Error::parse(6, "footprint needs five counts")),
        };
        match lines.next() {
            Some("") => {}
            _ => return Err(Error::parse(7, "expected blank line before payload")),
        }
        for (n, v) in [(3, &target), (4, &rm_name)] {
            validate_name(v).map_err(|e| Error::parse(n, e.to_string()))?;
        }

        let header_len: usize = text.split_inclusive('\n').take(7).map(str::len).sum();
        let body = &text[header_len..];
        let (weights, used) = parse_block(body, 8)?;
        let trailing = body.split('\n').skip(used).any(|l| !l.is_empty());
        if trailing || !body.ends_with('\n') {
            return Err(Error::Structural("unexpected content after payload".into()));
        }

        let expected = match kind {
            BitstreamKind::Full => sizes.full_bits(device),
            BitstreamKind::Partial => sizes.partial_bits(&footprint),
        };
        if size_bits != expected {
            return Err(Error::Structural(format!(
                "size_bits {size_bits} disagrees with size model ({expected} for a {kind} bitstream)"
            )));
        }
        Ok(Bitstream {
            kind,
            target,
            rm_name,
            size_bits,
            footprint,
            weights,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortKind {
    Jtag,
    Pcap,
}

impl FromStr for PortKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jtag" => Ok(PortKind::Jtag),
            "pcap" => Ok(PortKind::Pcap),
            _ => Err(Error::Structural(format!("unknown configuration port {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigPort {
    pub kind: PortKind,
    pub bits_per_second: f64,
}

impl ConfigPort {
    pub const JTAG_DEFAULT_BPS: f64 = 33e6;
    pub const PCAP_DEFAULT_BPS: f64 = 3.2e9;

    pub fn new(kind: PortKind, bits_per_second: f64) -> Result<Self> {
        if !(bits_per_second.is_finite() && bits_per_second > 0.0) {
            return Err(Error::Structural(format!(
                "port rate must be positive, got {bits_per_second}"
            )));
        }
        Ok(ConfigPort {
            kind,
            bits_per_second,
        })
    }

    pub fn jtag() -> Self {
        ConfigPort {
            kind: PortKind::Jtag,
            bits_per_second: Self::JTAG_DEFAULT_BPS,
        }
    }

    pub fn pcap() -> Self {
        ConfigPort {
            kind: PortKind::Pcap,
            bits_per_second: Self::PCAP_DEFAULT_BPS,
        }
    }
}

pub fn config_time_bits(size_bits: u64, port: &ConfigPort) -> f64 {
    size_bits as f64 / port.bits_per_second
}

/// Seconds to shift `bs` through `port`.
pub fn config_time(bs: &Bitstream, port: &ConfigPort) -> f64 {
    config_time_bits(bs.size_bits, port)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(kind: BitstreamKind) -> Bitstream {
        let sizes = SizeModel::default();
        let dev = Device::xc7z020();
        let fp = ResourceFootprint::new(743, 629, 2, 1, 5);
        Bitstream {
            kind,
            target: match kind {
                BitstreamKind::Full => dev.name.clone(),
                BitstreamKind::Partial => "rp0".into(),
            },
            rm_name: "M".into(),
            size_bits: match kind {
                BitstreamKind::Full => sizes.full_bits(&dev),
                BitstreamKind::Partial => sizes.partial_bits(&fp),
            },
            footprint: fp,
            weights: WeightArtifact::new("M", vec![0.5, -1.0], 0.125).unwrap(),
        }
    }

    #[test]
    fn canonical_text() {
        let bs = sample(BitstreamKind::Partial);
        let text = String::from_utf8(bs.serialize()).unwrap();
        assert_eq!(
            text,
            "bitstream v1\nkind partial\ntarget rp0\nrm M\nsize_bits 297200\nfootprint 743 629 2 1 5\n\n\
             svm-ac v1\nname M\nfeatures 2\nbias 0.125\n0.5\n-1\n"
        );
        let back = Bitstream::parse(text.as_bytes(), &SizeModel::default(), &Device::xc7z020()).unwrap();
        assert_eq!(back, bs);
    }

    #[test]
    fn rejects_inconsistent_size() {
        let mut bs = sample(BitstreamKind::Partial);
        bs.size_bits += 1;
        let e = Bitstream::parse(&bs.serialize(), &SizeModel::default(), &Device::xc7z020()).unwrap_err();
        assert!(matches!(e, Error::Structural(_)), "{e:?}");
        let mut bs = sample(BitstreamKind::Full);
        bs.size_bits = 297200;
        assert!(Bitstream::parse(&bs.serialize(), &SizeModel::default(), &Device::xc7z020()).is_err());
    }

    #[test]
    fn rejects_malformed() {
        let good = String::from_utf8(sample(BitstreamKind::Full).serialize()).unwrap();
        let (s, d) = (SizeModel::default(), Device::xc7z020());
        for (from, to) in [
            ("kind full", "kind half"),
            ("bitstream v1", "bitstream v0"),
            ("footprint 743 629 2 1 5", "footprint 743 629 2 1"),
            ("\n\nsvm-ac", "\nsvm-ac"),
            ("0.5\n", "0.5\n7\n"),
            ("-1\n", "nan\n"),
        ] {
            let bad = good.replacen(from, to, 1);
            assert!(Bitstream::parse(bad.as_bytes(), &s, &d).is_err(), "{from} -> {to}");
        }
    }

    #[test]
    fn config_times() {
        let jtag = ConfigPort::jtag();
        assert_eq!(config_time_bits(0, &jtag), 0.0);
        let p = config_time(&sample(BitstreamKind::Partial), &jtag);
        let f = config_time(&sample(BitstreamKind::Full), &jtag);
        assert_eq!(p, 297_200.0 / 33e6);
        assert!(p < f);
        assert!((1e-3..1e-2).contains(&p), "partial load {p}s should be in the millisecond decade");
        assert!(ConfigPort::new(PortKind::Pcap, 0.0).is_err());
    }
}
