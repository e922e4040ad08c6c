//! Model constants and the `key = value` override file.
//!
//! ```text
//! # comments and blank lines are ignored
//! device.clock_hz = 250e6
//! latency.pipelined = false
//! resources.per_core.slices = 740
//! resources.correction.N.luts = -2
//! power.base_watts = 1.5
//! bitstream.bits_per_slice_partial = 380
//! port.jtag_bps = 66e6
//! ```
//!
//! `latency.pipelined` is applied first and resets the other latency fields
//! to that mode's defaults; all remaining keys then apply in file order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LatencyParams, PowerModelParams, ResourceModelParams};
use crate::error::{read_file, Error, Result};
use crate::fabric::{ConfigPort, Device, PortKind, ResourceFootprint, SizeModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub device: Device,
    pub latency: LatencyParams,
    pub resources: ResourceModelParams,
    pub power: PowerModelParams,
    pub sizes: SizeModel,
    pub jtag_bps: f64,
    pub pcap_bps: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            device: Device::xc7z020(),
            latency: LatencyParams::pipelined_default(),
            resources: ResourceModelParams::default(),
            power: PowerModelParams::default(),
            sizes: SizeModel::default(),
            jtag_bps: ConfigPort::JTAG_DEFAULT_BPS,
            pcap_bps: ConfigPort::PCAP_DEFAULT_BPS,
        }
    }
}

fn footprint_field<'a>(fp: &'a mut ResourceFootprint, name: &str) -> Option<&'a mut u64> {
    Some(match name {
        "slices" => &mut fp.slices,
        "luts" => &mut fp.luts,
        "lut_ram" => &mut fp.lut_ram,
        "bram" => &mut fp.bram,
        "dsp" => &mut fp.dsp,
        _ => return None,
    })
}

impl Calibration {
    pub fn port(&self, kind: PortKind) -> ConfigPort {
        ConfigPort {
            kind,
            bits_per_second: match kind {
                PortKind::Jtag => self.jtag_bps,
                PortKind::Pcap => self.pcap_bps,
            },
        }
    }

    /// Defaults with the overrides in `text` applied.
    pub fn from_overrides(text: &str) -> Result<Self> {
        let mut c = Calibration::default();
        c.apply_overrides(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::parse(1, "invalid UTF-8"))?;
        Calibration::from_overrides(text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, found {body:?}")))?;
            entries.push((i + 1, k.trim(), v.trim()));
        }
        if let Some((line, _, v)) = entries.iter().find(|(_, k, _)| *k == "latency.pipelined") {
            self.latency = if parse_bool(*line, v)? {
                LatencyParams::pipelined_default()
            } else {
                LatencyParams::sequential_default()
            };
        }
        for (line, k, v) in entries {
            if k != "latency.pipelined" {
                self.set(line, k, v)?;
            }
        }
        self.validate()
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        let unknown = || Error::parse(line, format!("unknown calibration key `{key}`"));
        let parts: Vec<&str> = key.split('.').collect();
        match parts[..] {
            ["device", "name"] => self.device.name = v.to_string(),
            ["device", "clock_hz"] => self.device.clock_hz = parse_f64(line, v)?,
            ["device", "capacity", r] => *footprint_field(&mut self.device.capacity, r).ok_or_else(unknown)? = parse_u64(line, v)?,
            ["latency", f] => {
                let slot = match f {
                    "iteration_latency" => &mut self.latency.iteration_latency,
                    "initiation_interval" => &mut self.latency.initiation_interval,
                    "pipeline_depth" => &mut self.latency.pipeline_depth,
                    "fixed_overhead" => &mut self.latency.fixed_overhead,
                    _ => return Err(unknown()),
                };
                *slot = parse_u64(line, v)?;
            }
            ["resources", "correction", variant, r] => {
                let d = self.resources.corrections.entry(variant.to_string()).or_default();
                let slot = match r {
                    "slices" => &mut d.slices,
                    "luts" => &mut d.luts,
                    "lut_ram" => &mut d.lut_ram,
                    "bram" => &mut d.bram,
                    "dsp" => &mut d.dsp,
                    _ => return Err(unknown()),
                };
                *slot = v
                    .parse()
                    .map_err(|_| Error::parse(line, format!("expected integer, found {v:?}")))?;
            }
            ["resources", which, r] => {
                let fp = match which {
                    "base" => &mut self.resources.base,
                    "per_core" => &mut self.resources.per_core,
                    "dpr_margin" => &mut self.resources.dpr_margin,
                    "timer" => &mut self.resources.timer,
                    _ => return Err(unknown()),
                };
                *footprint_field(fp, r).ok_or_else(unknown)? = parse_u64(line, v)?;
            }
            ["power", f] => {
                let slot = match f {
                    "base_watts" => &mut self.power.base_watts,
                    "per_core_watts" => &mut self.power.per_core_watts,
                    "dpr_overhead_watts" => &mut self.power.dpr_overhead_watts,
                    "static_fraction" => &mut self.power.static_fraction,
                    "ps_fraction_of_dynamic" => &mut self.power.ps_fraction_of_dynamic,
                    _ => return Err(unknown()),
                };
                *slot = parse_f64(line, v)?;
            }
            ["bitstream", "bits_per_slice_full"] => self.sizes.bits_per_slice_full = parse_u64(line, v)?,
            ["bitstream", "bits_per_slice_partial"] => self.sizes.bits_per_slice_partial = parse_u64(line, v)?,
            ["port", "jtag_bps"] => self.jtag_bps = parse_f64(line, v)?,
            ["port", "pcap_bps"] => self.pcap_bps = parse_f64(line, v)?,
            _ => return Err(unknown()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        Device::new(self.device.name.clone(), self.device.capacity, self.device.clock_hz)?;
        self.latency.validate()?;
        self.power.validate()?;
        ConfigPort::new(PortKind::Jtag, self.jtag_bps)?;
        ConfigPort::new(PortKind::Pcap, self.pcap_bps)?;
        Ok(())
    }
}

fn parse_f64(line: usize, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::parse(line, format!("expected number, found {v:?}")))?;
    if !x.is_finite() {
        return Err(Error::NonFinite { line });
    }
    Ok(x)
}

fn parse_u64(line: usize, v: &str) -> Result<u64> {
    v.parse()
        .map_err(|_| Error::parse(line, format!("expected nonnegative integer, found {v:?}")))
}

fn parse_bool(line: usize, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::parse(line, format!("expected boolean, found {v:?}"))),
    }
}
