//! Cascade execution on simulated hardware: a static multi-core system with
//! one core per stage, and a single-partition system that swaps stage
//! modules in and out at run time.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ConfigPort, ConfigurationLibrary, DeviceState, FabricConfig, SvmCore};
use crate::cascade::{CascadeResult, CascadeSpec};
use crate::error::{Error, Result};
use crate::perf::{processing_time, LatencyParams};
use crate::svm::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapPolicy {
    /// Reconfigure only when the needed module is not already loaded.
    #[default]
    Lazy,
    /// After every instance that left stage 1, swap stage 1 back in.
    EagerRestore,
}

impl FromStr for SwapPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lazy" => Ok(SwapPolicy::Lazy),
            "eager" | "eager-restore" => Ok(SwapPolicy::EagerRestore),
            _ => Err(Error::Structural(format!("unknown swap policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    /// Index of the instance being processed (or just finished, for restores).
    pub instance: usize,
    pub from: String,
    pub to: String,
    pub t: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DprTrace {
    pub swaps: Vec<SwapRecord>,
    /// Module used for every core run, in order.
    pub stage_visits: Vec<String>,
    pub config_seconds: f64,
    pub compute_seconds: f64,
    pub core_cycles: u64,
}

impl DprTrace {
    pub fn swap_count(&self) -> usize {
        self.swaps.len()
    }
}

fn stage_bitstreams<'a>(
    spec: &CascadeSpec,
    library: &'a ConfigurationLibrary,
) -> Result<Vec<&'a super::Bitstream>> {
    spec.stages()
        .iter()
        .map(|s| {
            library.partial(&s.name).ok_or_else(|| Error::NotAdmissible {
                rm: s.name.clone(),
                rp: library.partition.id.clone(),
            })
        })
        .collect()
}

/// Runs the cascade on a single reconfigurable partition. Stage `k` is the
/// module named like the stage. The device must already hold a full
/// configuration.
pub fn dpr_cascade_run(
    state: &mut DeviceState,
    spec: &CascadeSpec,
    library: &ConfigurationLibrary,
    instances: &[FeatureVector],
    port: &ConfigPort,
    policy: SwapPolicy,
) -> Result<(Vec<CascadeResult>, DprTrace)> {
    if !state.static_loaded() {
        return Err(Error::ConfigOrder(
            "device must be configured with a full bitstream first".into(),
        ));
    }
    let partials = stage_bitstreams(spec, library)?;
    let mut trace = DprTrace::default();
    let mut results = Vec::with_capacity(instances.len());
    let cycles_before = state.core_cycles();
    let clock = state.config().device.clock_hz;

    let swap_to = |state: &mut DeviceState, trace: &mut DprTrace, k: usize, instance: usize| -> Result<()> {
        let from = state.rp_contents().unwrap_or_default().to_string();
        let t = state.now();
        let duration = state.reconfigure_partial(partials[k], port)?;
        trace.config_seconds += duration;
        trace.swaps.push(SwapRecord {
            instance,
            from,
            to: spec.stages()[k].name.clone(),
            t,
            duration,
        });
        Ok(())
    };

    for (i, x) in instances.iter().enumerate() {
        let mut distances = Vec::with_capacity(spec.len());
        let mut verdict = None;
        for (k, stage) in spec.stages().iter().enumerate() {
            if state.rp_contents() != Some(stage.name.as_str()) {
                swap_to(state, &mut trace, k, i)?;
            }
            let (o, cycles) = state.core_run(x)?;
            trace.stage_visits.push(stage.name.clone());
            trace.compute_seconds += processing_time(cycles, clock);
            distances.push(o.distance);
            if o.label.is_positive() || k + 1 == spec.len() {
                verdict = Some(CascadeResult {
                    label: o.label,
                    exit_stage: k + 1,
                    per_stage_distances: distances,
                });
                break;
            }
        }
        results.push(verdict.expect("cascade has at least one stage"));
        if policy == SwapPolicy::EagerRestore && state.rp_contents() != Some(spec.stages()[0].name.as_str()) {
            swap_to(state, &mut trace, 0, i)?;
        }
    }
    trace.core_cycles = state.core_cycles() - cycles_before;
    Ok((results, trace))
}

/// Static design with one core per stage, all resident at once.
#[derive(Debug, Clone)]
pub struct StaticCascadeSystem {
    cores: Vec<SvmCore>,
    latency: LatencyParams,
    clock_hz: f64,
    compute_seconds: f64,
    core_cycles: u64,
}

impl StaticCascadeSystem {
    pub fn new(spec: &CascadeSpec, config: &FabricConfig) -> Result<Self> {
        let cores = spec
            .stages()
            .iter()
            .map(|s| SvmCore::new(s.weights.clone()))
            .collect::<Result<_>>()?;
        Ok(StaticCascadeSystem {
            cores,
            latency: config.latency,
            clock_hz: config.device.clock_hz,
            compute_seconds: 0.0,
            core_cycles: 0,
        })
    }

    pub fn classify(&mut self, x: &FeatureVector) -> Result<CascadeResult> {
        let n = self.cores.len();
        let mut distances = Vec::with_capacity(n);
        for (k, core) in self.cores.iter_mut().enumerate() {
            let (o, cycles) = core.host_run(x, &self.latency)?;
            self.compute_seconds += processing_time(cycles, self.clock_hz);
            self.core_cycles += cycles;
            distances.push(o.distance);
            if o.label.is_positive() || k + 1 == n {
                return Ok(CascadeResult {
                    label: o.label,
                    exit_stage: k + 1,
                    per_stage_distances: distances,
                });
            }
        }
        unreachable!("static system has at least one core")
    }

    pub fn run(&mut self, instances: &[FeatureVector]) -> Result<Vec<CascadeResult>> {
        instances.iter().map(|x| self.classify(x)).collect()
    }

    pub fn compute_seconds(&self) -> f64 {
        self.compute_seconds
    }

    pub fn core_cycles(&self) -> u64 {
        self.core_cycles
    }
}
