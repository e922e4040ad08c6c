use std::fmt::{self, Write};

use super::{
    config_time, Bitstream, BitstreamKind, ConfigPort, ConfigurationLibrary, FabricConfig,
    ReconfigurablePartition, ResourceFootprint, SvmCore,
};
use crate::error::{Error, Result};
use crate::perf::processing_time;
use crate::svm::{DecisionOutcome, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    ConfigFull,
    ConfigPartial,
    Run,
}

impl EventKind {
    pub fn is_config(self) -> bool {
        !matches!(self, EventKind::Run)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::ConfigFull => "config-full",
            EventKind::ConfigPartial => "config-partial",
            EventKind::Run => "run",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Simulated time at which the event started, in seconds.
    pub t: f64,
    pub kind: EventKind,
    pub rm: String,
    pub duration: f64,
    pub detail: String,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} rm={} dur={}", self.t, self.kind, self.rm, self.duration)?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

/// Simulated device: static region, one reconfigurable partition, and the
/// core currently loaded into it.
#[derive(Debug, Clone)]
pub struct DeviceState {
    config: FabricConfig,
    partition: ReconfigurablePartition,
    static_loaded: bool,
    core: Option<(String, SvmCore)>,
    events: Vec<Event>,
    cumulative_config_time: f64,
    now: f64,
    total_cycles: u64,
    elapsed_cycles: u64,
}

impl DeviceState {
    /// Unconfigured device for the given library's partition.
    pub fn new(config: FabricConfig, library: &ConfigurationLibrary) -> Self {
        DeviceState {
            config,
            partition: library.partition.clone(),
            static_loaded: false,
            core: None,
            events: Vec::new(),
            cumulative_config_time: 0.0,
            now: 0.0,
            total_cycles: 0,
            elapsed_cycles: 0,
        }
    }

    pub fn config(&self) -> &FabricConfig {
        &self.config
    }

    pub fn partition(&self) -> &ReconfigurablePartition {
        &self.partition
    }

    pub fn static_loaded(&self) -> bool {
        self.static_loaded
    }

    pub fn rp_contents(&self) -> Option<&str> {
        self.core.as_ref().map(|(n, _)| n.as_str())
    }

    pub fn core(&self) -> Option<&SvmCore> {
        self.core.as_ref().map(|(_, c)| c)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn cumulative_config_time(&self) -> f64 {
        self.cumulative_config_time
    }

    /// Simulated time elapsed since power-on.
    pub fn now(&self) -> f64 {
        self.now
    }

    /// Fabric in use: static region (with timer if fitted) plus the partition
    /// once configured.
    pub fn footprint(&self) -> ResourceFootprint {
        if self.static_loaded {
            self.config.static_footprint() + self.partition.allocated
        } else {
            ResourceFootprint::default()
        }
    }

    /// Free-running cycle counter; present only when the timer is fitted.
    pub fn cycle_counter(&self) -> Option<u64> {
        self.config.timer.map(|_| self.elapsed_cycles)
    }

    /// Total core cycles spent in runs.
    pub fn core_cycles(&self) -> u64 {
        self.total_cycles
    }

    fn log_config(&mut self, kind: EventKind, bs: &Bitstream, port: &ConfigPort) -> f64 {
        let duration = config_time(bs, port);
        self.events.push(Event {
            t: self.now,
            kind,
            rm: bs.rm_name.clone(),
            duration,
            detail: format!("bits={} port={:?}", bs.size_bits, port.kind).to_lowercase(),
        });
        self.now += duration;
        self.elapsed_cycles += (duration * self.config.device.clock_hz).round() as u64;
        self.cumulative_config_time += duration;
        duration
    }

    fn load(&mut self, bs: &Bitstream) -> Result<()> {
        if !self.partition.admits(&bs.rm_name) {
            return Err(Error::NotAdmissible {
                rm: bs.rm_name.clone(),
                rp: self.partition.id.clone(),
            });
        }
        self.core = Some((bs.rm_name.clone(), SvmCore::new(bs.weights.clone())?));
        Ok(())
    }

    /// Programs the whole device. Allowed at any time.
    pub fn configure_full(&mut self, bs: &Bitstream, port: &ConfigPort) -> Result<f64> {
        if bs.kind != BitstreamKind::Full {
            return Err(Error::ConfigOrder("partial bitstream passed to full configuration".into()));
        }
        if bs.target != self.config.device.name {
            return Err(Error::ConfigOrder(format!(
                "bitstream targets device `{}`, this is `{}`",
                bs.target, self.config.device.name
            )));
        }
        self.load(bs)?;
        self.static_loaded = true;
        Ok(self.log_config(EventKind::ConfigFull, bs, port))
    }

    /// Swaps the partition contents; the static region keeps running.
    pub fn reconfigure_partial(&mut self, bs: &Bitstream, port: &ConfigPort) -> Result<f64> {
        if bs.kind != BitstreamKind::Partial {
            return Err(Error::ConfigOrder("full bitstream passed to partial reconfiguration".into()));
        }
        if !self.static_loaded {
            return Err(Error::ConfigOrder(
                "device must be configured with a full bitstream first".into(),
            ));
        }
        if bs.target != self.partition.id {
            return Err(Error::ConfigOrder(format!(
                "bitstream targets partition `{}`, device has `{}`",
                bs.target, self.partition.id
            )));
        }
        self.load(bs)?;
        Ok(self.log_config(EventKind::ConfigPartial, bs, port))
    }

    fn core_mut(&mut self) -> Result<&mut SvmCore> {
        match &mut self.core {
            Some((_, c)) => Ok(c),
            None => Err(Error::ConfigOrder("no module loaded in the partition".into())),
        }
    }

    pub fn read_register(&self, offset: usize) -> Result<u32> {
        match &self.core {
            Some((_, c)) => c.read(offset),
            None => Err(Error::ConfigOrder("no module loaded in the partition".into())),
        }
    }

    /// Host register write. Raising START runs the core to completion.
    pub fn write_register(&mut self, offset: usize, value: u32) -> Result<()> {
        let latency = self.config.latency;
        if self.core_mut()?.write(offset, value)? {
            let (outcome, cycles) = self.core_mut()?.execute(&latency)?;
            self.log_run(outcome, cycles);
        }
        Ok(())
    }

    fn log_run(&mut self, outcome: DecisionOutcome, cycles: u64) {
        let duration = processing_time(cycles, self.config.device.clock_hz);
        let rm = self.rp_contents().unwrap_or_default().to_string();
        self.events.push(Event {
            t: self.now,
            kind: EventKind::Run,
            rm,
            duration,
            detail: format!("cycles={cycles} label={}", outcome.label),
        });
        self.now += duration;
        self.total_cycles += cycles;
        self.elapsed_cycles += cycles;
    }

    /// Host transaction on the loaded core: features in, START, poll, result out.
    pub fn core_run(&mut self, x: &FeatureVector) -> Result<(DecisionOutcome, u64)> {
        let latency = self.config.latency;
        let (outcome, cycles) = self.core_mut()?.host_run(x, &latency)?;
        self.log_run(outcome, cycles);
        Ok((outcome, cycles))
    }

    /// One line per event: `<t_seconds> <event-kind> <detail>`.
    pub fn trace(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(out, "{e}");
        }
        out
    }
}
