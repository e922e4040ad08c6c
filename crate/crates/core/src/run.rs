//! End-to-end classification runs.
//!
//! A run loads a model or cascade and an instance file, classifies every
//! instance in one of three modes and collects the results with timing,
//! resource and power estimates into a [`RunReport`]:
//!
//! - `monolithic`: one stage on a single register-mapped core
//! - `cascade`: all stages resident, evaluated in software order
//! - `dpr`: stages time-share one reconfigurable partition

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cascade::{cascade_classify_batch, load_cascade, CascadeResult, CascadeSpec, EvaluationReport};
use crate::error::{read_file, Error, Result};
use crate::fabric::{
    build_configuration_library, dpr_cascade_run, DeviceState, FabricConfig, PortKind, ReconfigurableModule,
    SvmCore, SwapPolicy,
};
use crate::perf::report::SystemSummary;
use crate::perf::{
    cascade_processing_time, estimate_power, estimate_resources, Calibration, PowerEstimate,
    SystemDescriptor,
};
use crate::svm::artifact::{parse_weight_artifact, MAGIC};
use crate::svm::instances::parse_instance_file;
use crate::svm::model_file::load_model_file;
use crate::svm::{accumulate_weights, ClassLabel, Instance, WeightArtifact};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Monolithic,
    Cascade,
    Dpr,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Monolithic => "monolithic",
            Mode::Cascade => "cascade",
            Mode::Dpr => "dpr",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monolithic" | "mono" => Ok(Mode::Monolithic),
            "cascade" => Ok(Mode::Cascade),
            "dpr" => Ok(Mode::Dpr),
            _ => Err(Error::Structural(format!("unknown mode {s:?}"))),
        }
    }
}

/// File-level description of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// SVM-Light model or weight artifact; monolithic mode only.
    pub model: Option<PathBuf>,
    /// Cascade file; cascade and dpr modes.
    pub cascade: Option<PathBuf>,
    pub instances: PathBuf,
    pub labeled: bool,
    pub clock_hz: Option<f64>,
    pub port: PortKind,
    pub policy: SwapPolicy,
    pub timer: bool,
    pub calibration: Option<PathBuf>,
    /// Where to write the DPR event trace.
    pub trace: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(mode: Mode, instances: impl Into<PathBuf>) -> Self {
        RunConfig {
            mode,
            model: None,
            cascade: None,
            instances: instances.into(),
            labeled: false,
            clock_hz: None,
            port: PortKind::Jtag,
            policy: SwapPolicy::Lazy,
            timer: false,
            calibration: None,
            trace: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            Mode::Monolithic if self.model.is_none() => {
                return Err(Error::Structural("monolithic mode needs a model file".into()))
            }
            Mode::Cascade | Mode::Dpr if self.cascade.is_none() => {
                return Err(Error::Structural(format!("{} mode needs a cascade file", self.mode)))
            }
            _ => {}
        }
        if let Some(c) = self.clock_hz {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Structural(format!("clock must be positive, got {c}")));
            }
        }
        if self.trace.is_some() && self.mode != Mode::Dpr {
            return Err(Error::Structural("a trace is only produced in dpr mode".into()));
        }
        Ok(())
    }
}

/// Run parameters that do not name files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub labeled: bool,
    pub port: PortKind,
    pub policy: SwapPolicy,
    pub timer: bool,
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            labeled: false,
            port: PortKind::Jtag,
            policy: SwapPolicy::Lazy,
            timer: false,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub index: usize,
    pub label: ClassLabel,
    pub exit_stage: usize,
    pub distances: Vec<f64>,
    pub compute_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Sum of the per-instance compute times, in instance order.
    pub compute_seconds: f64,
    /// Full plus partial configuration time.
    pub config_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DprSummary {
    pub port: PortKind,
    pub policy: SwapPolicy,
    pub swaps: usize,
    pub full_config_seconds: f64,
    pub partial_config_seconds: Vec<f64>,
    pub trace_path: Option<String>,
}

/// Field order here is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub seed: Option<u64>,
    pub stages: Vec<String>,
    pub dimension: usize,
    pub clock_hz: f64,
    pub timer: bool,
    pub results: Vec<InstanceRecord>,
    pub timing: Timing,
    pub evaluation: Option<EvaluationReport>,
    pub system: SystemSummary,
    pub power: PowerEstimate,
    pub dpr: Option<DprSummary>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::parse(1, "invalid UTF-8"))?;
        RunReport::from_json(text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.results.iter().map(|r| r.label).collect()
    }

    /// Per-instance rows: index, label, exit stage, one distance column per stage.
    pub fn results_csv(&self) -> String {
        let mut out = String::from("index,label,exit_stage");
        for s in &self.stages {
            out.push_str(&format!(",distance_{s}"));
        }
        out.push('\n');
        for r in &self.results {
            out.push_str(&format!("{},{},{}", r.index, r.label, r.exit_stage));
            for k in 0..self.stages.len() {
                out.push(',');
                if let Some(d) = r.distances.get(k) {
                    out.push_str(&d.to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("mode        {}\n", self.mode));
        out.push_str(&format!("stages      {}\n", self.stages.join(" -> ")));
        out.push_str(&format!("instances   {}\n", self.results.len()));
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed        {seed}\n"));
        }
        let pos = self.results.iter().filter(|r| r.label.is_positive()).count();
        out.push_str(&format!("positive    {pos}\n"));
        out.push_str(&format!("compute     {:.3} us\n", self.timing.compute_seconds * 1e6));
        out.push_str(&format!("config      {:.3} ms\n", self.timing.config_seconds * 1e3));
        out.push_str(&format!("total       {:.3} ms\n", self.timing.total_seconds * 1e3));
        if let Some(d) = &self.dpr {
            out.push_str(&format!("swaps       {}\n", d.swaps));
        }
        if let Some(e) = &self.evaluation {
            let c = e.counts;
            out.push_str(&format!("confusion   tp={} tn={} fp={} fn={}\n", c.tp, c.tn, c.fp, c.fn_));
            let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.2}%", v * 100.0));
            out.push_str(&format!("accuracy    {}\n", pct(e.accuracy)));
            out.push_str(&format!("sensitivity {}\n", pct(e.sensitivity)));
            out.push_str(&format!("specificity {}\n", pct(e.specificity)));
        }
        let f = self.system.footprint;
        out.push_str(&format!(
            "resources   slices={} luts={} lut_ram={} bram={} dsp={}\n",
            f.slices, f.luts, f.lut_ram, f.bram, f.dsp
        ));
        out.push_str(&format!("power       {:.2} W\n", self.power.total_watts));
        out
    }
}

/// Report plus the DPR event trace, when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trace: Option<String>,
}

fn descriptor(mode: Mode, stages: usize, timer: bool) -> SystemDescriptor {
    match mode {
        Mode::Monolithic => SystemDescriptor::monolithic(),
        Mode::Cascade => SystemDescriptor::cascade(stages as u32),
        Mode::Dpr => SystemDescriptor::dpr(),
    }
    .with_timer(timer)
}

fn system_label(mode: Mode, timer: bool) -> String {
    if timer {
        format!("{mode}+timer")
    } else {
        mode.to_string()
    }
}

/// Classifies `instances` with `spec` in the given mode. Monolithic mode takes
/// a single-stage spec.
pub fn run_in_memory(
    mode: Mode,
    spec: &CascadeSpec,
    instances: &[Instance],
    opts: &RunOptions,
    cal: &Calibration,
) -> Result<RunOutcome> {
    cal.validate()?;
    if mode == Mode::Monolithic && spec.len() != 1 {
        return Err(Error::Structural(format!(
            "monolithic mode takes one model, got {} stages",
            spec.len()
        )));
    }
    let dim = spec.dimension();
    for (i, inst) in instances.iter().enumerate() {
        if inst.features.dimension() != dim {
            return Err(Error::dim(dim, inst.features.dimension()).context(format!("instance {i}")));
        }
    }
    let truths = if opts.labeled {
        Some(crate::cascade::labels_of(instances)?)
    } else {
        None
    };
    let clock = cal.device.clock_hz;
    let latency = cal.latency;

    let mut trace = None;
    let mut dpr = None;
    let mut config_seconds = 0.0;
    let results: Vec<CascadeResult> = match mode {
        Mode::Monolithic => {
            let mut core = SvmCore::new(spec.stages()[0].weights.clone())?;
            instances
                .iter()
                .map(|inst| {
                    let (o, _) = core.host_run(&inst.features, &latency)?;
                    Ok(CascadeResult {
                        label: o.label,
                        exit_stage: 1,
                        per_stage_distances: vec![o.distance],
                    })
                })
                .collect::<Result<_>>()?
        }
        Mode::Cascade => cascade_classify_batch(spec, instances)?,
        Mode::Dpr => {
            let fabric = FabricConfig::from_calibration(cal, opts.timer);
            let rms = spec
                .stages()
                .iter()
                .map(|s| ReconfigurableModule::new(s.name.clone(), s.weights.clone(), cal.resources.per_core))
                .collect::<Result<Vec<_>>>()?;
            let library = build_configuration_library(&fabric, &rms)?;
            let port = cal.port(opts.port);
            let mut state = DeviceState::new(fabric, &library);
            let first = &spec.stages()[0].name;
            let full_bs = library
                .full(first)
                .ok_or_else(|| Error::Structural(format!("no full bitstream for `{first}`")))?;
            let full = state.configure_full(full_bs, &port)?;
            let xs: Vec<_> = instances.iter().map(|i| i.features.clone()).collect();
            let (res, t) = dpr_cascade_run(&mut state, spec, &library, &xs, &port, opts.policy)?;
            config_seconds = state.cumulative_config_time();
            dpr = Some(DprSummary {
                port: opts.port,
                policy: opts.policy,
                swaps: t.swap_count(),
                full_config_seconds: full,
                partial_config_seconds: t.swaps.iter().map(|s| s.duration).collect(),
                trace_path: None,
            });
            trace = Some(state.trace());
            res
        }
    };

    let stage_times = (1..=spec.len())
        .map(|k| cascade_processing_time(spec, k, clock, &latency))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<InstanceRecord> = results
        .iter()
        .enumerate()
        .map(|(index, r)| InstanceRecord {
            index,
            label: r.label,
            exit_stage: r.exit_stage,
            distances: r.per_stage_distances.clone(),
            compute_seconds: stage_times[r.exit_stage - 1],
        })
        .collect();
    let compute_seconds = records.iter().map(|r| r.compute_seconds).sum::<f64>();

    let evaluation = truths.map(|t| EvaluationReport::from_results(spec.len(), t, &results));
    let desc = descriptor(mode, spec.len(), opts.timer);
    let footprint = estimate_resources(&desc, &cal.resources, &cal.device)?;
    let power = estimate_power(&desc, &cal.power)?;
    let worst = *stage_times.last().expect("at least one stage");
    let system = SystemSummary {
        label: system_label(mode, opts.timer),
        footprint,
        power_watts: power.total_watts,
        clock_hz: clock,
        processing_time_s: Some(worst),
    };
    let report = RunReport {
        mode,
        seed: opts.seed,
        stages: spec.stages().iter().map(|s| s.name.clone()).collect(),
        dimension: dim,
        clock_hz: clock,
        timer: opts.timer,
        results: records,
        timing: Timing {
            compute_seconds,
            config_seconds,
            total_seconds: compute_seconds + config_seconds,
        },
        evaluation,
        system,
        power,
        dpr,
    };
    Ok(RunOutcome { report, trace })
}

/// Loads a weight artifact, or an SVM-Light model which is accumulated on the fly.
pub fn load_weights(path: &Path) -> Result<WeightArtifact> {
    let bytes = read_file(path)?;
    let ctx = |e: Error| e.context(path.display().to_string());
    if bytes.starts_with(MAGIC.as_bytes()) {
        return parse_weight_artifact(&bytes).map_err(ctx);
    }
    let model = load_model_file(path)?;
    accumulate_weights(&model).map_err(ctx)
}

/// Seed recorded by the generator as a `# seed N` comment line.
pub fn recorded_seed(bytes: &[u8]) -> Option<u64> {
    let text = std::str::from_utf8(bytes).ok()?;
    text.lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .find_map(|l| l.trim().strip_prefix("seed").and_then(|v| v.trim().parse().ok()))
}

/// Runs `cfg` against the default calibration with `cfg.calibration` applied.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut cal = match &cfg.calibration {
        Some(p) => Calibration::load(p)?,
        None => Calibration::default(),
    };
    if let Some(c) = cfg.clock_hz {
        cal.device.clock_hz = c;
    }
    let spec = match cfg.mode {
        Mode::Monolithic => {
            let w = load_weights(cfg.model.as_ref().expect("validated"))?;
            CascadeSpec::from_weights([w])?
        }
        Mode::Cascade | Mode::Dpr => load_cascade(cfg.cascade.as_ref().expect("validated"))?,
    };
    let bytes = read_file(&cfg.instances)?;
    let instances = parse_instance_file(&bytes, spec.dimension(), cfg.labeled)
        .map_err(|e| e.context(cfg.instances.display().to_string()))?;
    let opts = RunOptions {
        labeled: cfg.labeled,
        port: cfg.port,
        policy: cfg.policy,
        timer: cfg.timer,
        seed: recorded_seed(&bytes),
    };
    let mut out = run_in_memory(cfg.mode, &spec, &instances, &opts, &cal)?;
    if let (Some(path), Some(trace)) = (&cfg.trace, &out.trace) {
        std::fs::write(path, trace).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        if let Some(d) = out.report.dpr.as_mut() {
            d.trace_path = Some(path.display().to_string());
        }
    }
    Ok(out)
}
