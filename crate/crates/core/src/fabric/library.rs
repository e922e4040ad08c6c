use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Bitstream, BitstreamKind, Device, ResourceFootprint, SizeModel};
use crate::error::{Error, Result};
use crate::perf::{Calibration, LatencyParams};
use crate::svm::{validate_name, WeightArtifact};

/// Everything about the static design that the fabric model needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FabricConfig {
    pub device: Device,
    /// Static wrapper footprint, excluding the optional timer.
    pub static_base: ResourceFootprint,
    pub dpr_margin: ResourceFootprint,
    /// Cycle-counter peripheral footprint when fitted.
    pub timer: Option<ResourceFootprint>,
    pub sizes: SizeModel,
    pub latency: LatencyParams,
    pub partition_id: String,
}

impl FabricConfig {
    pub fn from_calibration(cal: &Calibration, with_timer: bool) -> Self {
        FabricConfig {
            device: cal.device.clone(),
            static_base: cal.resources.base,
            dpr_margin: cal.resources.dpr_margin,
            timer: with_timer.then_some(cal.resources.timer),
            sizes: cal.sizes,
            latency: cal.latency,
            partition_id: "rp0".into(),
        }
    }

    /// Static region as fitted, including the timer.
    pub fn static_footprint(&self) -> ResourceFootprint {
        self.static_base + self.timer.unwrap_or_default()
    }
}

impl Default for FabricConfig {
    fn default() -> Self {
        FabricConfig::from_calibration(&Calibration::default(), false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconfigurableModule {
    pub name: String,
    pub weights: WeightArtifact,
    pub footprint: ResourceFootprint,
}

impl ReconfigurableModule {
    pub fn new(name: impl Into<String>, weights: WeightArtifact, footprint: ResourceFootprint) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        if footprint.is_zero() {
            return Err(Error::Structural(format!("module `{name}` has an empty footprint")));
        }
        Ok(ReconfigurableModule {
            name,
            weights,
            footprint,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconfigurablePartition {
    pub id: String,
    /// Component-wise max over admissible modules, plus margin.
    pub allocated: ResourceFootprint,
    pub admissible: Vec<String>,
}

impl ReconfigurablePartition {
    pub fn admits(&self, rm: &str) -> bool {
        self.admissible.iter().any(|n| n == rm)
    }
}

/// Full and partial bitstreams for every module, sorted by module name with
/// the full bitstream first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationLibrary {
    pub partition: ReconfigurablePartition,
    pub bitstreams: Vec<Bitstream>,
}

impl ConfigurationLibrary {
    fn find(&self, rm: &str, kind: BitstreamKind) -> Option<&Bitstream> {
        self.bitstreams.iter().find(|b| b.rm_name == rm && b.kind == kind)
    }

    pub fn full(&self, rm: &str) -> Option<&Bitstream> {
        self.find(rm, BitstreamKind::Full)
    }

    pub fn partial(&self, rm: &str) -> Option<&Bitstream> {
        self.find(rm, BitstreamKind::Partial)
    }
}

pub fn build_configuration_library(
    config: &FabricConfig,
    rms: &[ReconfigurableModule],
) -> Result<ConfigurationLibrary> {
    let first = rms
        .first()
        .ok_or_else(|| Error::Structural("configuration library needs at least one module".into()))?;
    let dim = first.weights.dimension();
    let mut names = BTreeSet::new();
    for rm in rms {
        if !names.insert(rm.name.as_str()) {
            return Err(Error::Structural(format!("duplicate module name `{}`", rm.name)));
        }
        if rm.weights.dimension() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: rm.weights.dimension(),
                context: Some(format!("module `{}`", rm.name)),
            });
        }
    }

    let allocated = rms
        .iter()
        .fold(ResourceFootprint::default(), |acc, rm| acc.max(rm.footprint))
        + config.dpr_margin;
    let whole = config.static_footprint() + allocated;
    whole.check_fits(&config.device.capacity)?;

    let full_bits = config.sizes.full_bits(&config.device);
    let partial_bits = config.sizes.partial_bits(&allocated);
    if partial_bits >= full_bits {
        return Err(Error::Structural(format!(
            "partial bitstream ({partial_bits} bits) would not be smaller than full ({full_bits} bits)"
        )));
    }

    let mut sorted: Vec<&ReconfigurableModule> = rms.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut bitstreams = Vec::with_capacity(2 * rms.len());
    for rm in sorted {
        bitstreams.push(Bitstream {
            kind: BitstreamKind::Full,
            target: config.device.name.clone(),
            rm_name: rm.name.clone(),
            size_bits: full_bits,
            footprint: whole,
            weights: rm.weights.clone(),
        });
        bitstreams.push(Bitstream {
            kind: BitstreamKind::Partial,
            target: config.partition_id.clone(),
            rm_name: rm.name.clone(),
            size_bits: partial_bits,
            footprint: allocated,
            weights: rm.weights.clone(),
        });
    }

    Ok(ConfigurationLibrary {
        partition: ReconfigurablePartition {
            id: config.partition_id.clone(),
            allocated,
            admissible: names.into_iter().map(String::from).collect(),
        },
        bitstreams,
    })
}
