use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cascade_dpr::cascade::serialize_cascade_file;
use cascade_dpr::fabric::{PortKind, SwapPolicy};
use cascade_dpr::perf::report::{comparison_csv, comparison_table, utilization_csv, utilization_table, SystemSummary};
use cascade_dpr::perf::{
    core_latency_cycles, estimate_power, estimate_resources, processing_time, Calibration, SystemDescriptor,
};
use cascade_dpr::run::{execute, Mode, RunConfig, RunReport};
use cascade_dpr::svm::model_file::{load_model_file, serialize_model_file};
use cascade_dpr::svm::{accumulate_weights, serialize_instances, serialize_weight_artifact};
use cascade_dpr::{synth, Error, ErrorClass};

const CALIBRATION_ENV: &str = "CASCADE_DPR_CALIBRATION";

#[derive(Parser)]
#[command(name = "cascade-dpr", version, about = "Cascade linear-SVM classifier on a simulated reconfigurable SoC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fold an SVM-Light model into a weight artifact.
    Build(BuildArgs),
    /// Estimate resources, power and timing for a system variant.
    Synth(SynthArgs),
    /// Classify an instance file.
    Run(RunArgs),
    /// Compare saved run reports.
    Report(ReportArgs),
    /// Write a seeded synthetic cascade and instance set.
    Gen(GenArgs),
}

#[derive(Args)]
struct CalibrationArg {
    /// Calibration overrides (key = value).
    #[arg(long, env = CALIBRATION_ENV)]
    calibration: Option<PathBuf>,
}

impl CalibrationArg {
    fn load(&self) -> cascade_dpr::Result<Calibration> {
        match &self.calibration {
            Some(p) => Calibration::load(p),
            None => Ok(Calibration::default()),
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    model: PathBuf,
    /// Output path; defaults to the model path with an `.ac` extension.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Artifact name; defaults to the model file stem.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    cores: u32,
    /// Single reconfigurable partition instead of static cores.
    #[arg(long)]
    dpr: bool,
    /// Include the cycle counter.
    #[arg(long)]
    timer: bool,
    /// Per-variant correction key, e.g. N or RM-N.
    #[arg(long)]
    variant: Option<String>,
    /// Feature count used for the latency estimate.
    #[arg(long, default_value_t = 27)]
    features: usize,
    /// Cascade depth for the worst-case time; defaults to the core count, or 2 with --dpr.
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    clock_hz: Option<f64>,
    #[command(flatten)]
    calibration: CalibrationArg,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    /// SVM-Light model or weight artifact (monolithic mode).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Cascade file (cascade and dpr modes).
    #[arg(long)]
    cascade: Option<PathBuf>,
    #[arg(long)]
    instances: PathBuf,
    /// First column of each instance line is the true class.
    #[arg(long)]
    labeled: bool,
    #[arg(long)]
    clock_hz: Option<f64>,
    #[arg(long, default_value = "jtag", value_parser = parse_port)]
    port: PortKind,
    #[arg(long, default_value = "lazy", value_parser = parse_policy)]
    policy: SwapPolicy,
    #[arg(long)]
    timer: bool,
    #[command(flatten)]
    calibration: CalibrationArg,
    /// Write the DPR event trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write per-instance results as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Also print the utilization table.
    #[arg(long)]
    utilization: bool,
    #[command(flatten)]
    calibration: CalibrationArg,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 27)]
    dim: usize,
    /// Support vectors in the sensitive and specific stage.
    #[arg(long, num_args = 2, default_values_t = [61, 139])]
    svs: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    instances: usize,
    /// Threshold offset of each stage from the true hyperplane.
    #[arg(long, default_value_t = 0.4)]
    shift: f64,
    /// Per-weight perturbation of each stage.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Label-noise probability.
    #[arg(long, default_value_t = 0.05)]
    flip: f64,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_port(s: &str) -> Result<PortKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_policy(s: &str) -> Result<SwapPolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn cmd_build(a: BuildArgs) -> anyhow::Result<()> {
    let mut model = load_model_file(&a.model)?;
    if let Some(name) = a.name {
        model = model.with_name(name)?;
    }
    let w = accumulate_weights(&model)?;
    let out = a.output.unwrap_or_else(|| a.model.with_extension("ac"));
    write(&out, serialize_weight_artifact(&w))?;
    println!("name            {}", w.name());
    println!("dimension       {}", w.dimension());
    println!("support vectors {}", model.support_vectors().len());
    println!("wrote           {}", out.display());
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let mut cal = a.calibration.load()?;
    if let Some(c) = a.clock_hz {
        cal.device.clock_hz = c;
        cal.validate()?;
    }
    let mut desc = if a.dpr {
        SystemDescriptor::dpr()
    } else {
        SystemDescriptor::cascade(a.cores)
    }
    .with_timer(a.timer);
    if let Some(v) = &a.variant {
        desc = desc.with_variant(v.clone());
    }
    let footprint = estimate_resources(&desc, &cal.resources, &cal.device)?;
    let power = estimate_power(&desc, &cal.power)?;
    let stages = a.stages.unwrap_or(if a.dpr { 2 } else { a.cores as usize }).max(1);
    let cycles = core_latency_cycles(a.features, &cal.latency);
    let stage_time = processing_time(cycles, cal.device.clock_hz);
    let worst = processing_time(cycles * stages as u64, cal.device.clock_hz);

    let label = match (&a.variant, a.dpr, a.cores) {
        (Some(v), _, _) => v.clone(),
        (None, true, _) => "DPR".to_string(),
        (None, false, 1) => "Monolithic".to_string(),
        (None, false, n) => format!("Cascade ({n} cores)"),
    };
    let summary = SystemSummary {
        label,
        footprint,
        power_watts: power.total_watts,
        clock_hz: cal.device.clock_hz,
        processing_time_s: Some(worst),
    };
    print!("{}", utilization_table(std::slice::from_ref(&summary), &cal.device));
    println!();
    println!(
        "power           {:.2} W (static {:.3}, PS dynamic {:.3}, PL dynamic {:.3})",
        power.total_watts, power.static_watts, power.ps_dynamic_watts, power.pl_dynamic_watts
    );
    println!("latency         {cycles} cycles per stage ({} features)", a.features);
    println!("clock           {} MHz", cal.device.clock_hz / 1e6);
    println!("processing time {:.2} us per stage, {:.2} us over {stages} stages", stage_time * 1e6, worst * 1e6);
    if let Some(p) = a.csv {
        write(&p, utilization_csv(&[summary], &cal.device))?;
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let cfg = RunConfig {
        mode: a.mode,
        model: a.model,
        cascade: a.cascade,
        instances: a.instances,
        labeled: a.labeled,
        clock_hz: a.clock_hz,
        port: a.port,
        policy: a.policy,
        timer: a.timer,
        calibration: a.calibration.calibration,
        trace: a.trace,
    };
    let out = execute(&cfg)?;
    print!("{}", out.report.summary_text());
    if let Some(p) = a.report {
        write(&p, out.report.to_json())?;
    }
    if let Some(p) = a.csv {
        write(&p, out.report.results_csv())?;
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> anyhow::Result<()> {
    let cal = a.calibration.load()?;
    let systems = a
        .reports
        .iter()
        .map(|p| RunReport::load(p).map(|r| r.system))
        .collect::<cascade_dpr::Result<Vec<_>>>()?;
    print!("{}", comparison_table(&systems));
    if a.utilization {
        println!();
        print!("{}", utilization_table(&systems, &cal.device));
    }
    if let Some(p) = a.csv {
        write(&p, comparison_csv(&systems))?;
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&a.flip) {
        return Err(Error::Structural(format!("flip probability {} outside [0, 1]", a.flip)).into());
    }
    std::fs::create_dir_all(&a.out).map_err(|source| Error::Io {
        path: a.out.clone(),
        source,
    })?;
    let mut rng = synth::rng(a.seed);
    let task = synth::screening_task(&mut rng, a.dim, (a.svs[0], a.svs[1]), a.shift, a.noise)?;
    let xs = synth::labeled_instances(&mut rng, &task.truth, a.instances, a.flip)?;
    let (m, n) = task.stage_weights()?;
    let mut entries = Vec::new();
    for (model, w) in [(&task.sensitive, &m), (&task.specific, &n)] {
        let name = model.name();
        write(&a.out.join(format!("{name}.svm")), serialize_model_file(model))?;
        write(&a.out.join(format!("{name}.ac")), serialize_weight_artifact(w))?;
        entries.push((name.to_string(), PathBuf::from(format!("{name}.ac"))));
    }
    write(&a.out.join("cascade.txt"), serialize_cascade_file(&entries))?;
    let mut body = format!("# seed {}\n", a.seed).into_bytes();
    body.extend(serialize_instances(&xs));
    write(&a.out.join("instances.csv"), body)?;
    println!("seed      {}", a.seed);
    println!("models    M ({} SVs), N ({} SVs), {} features", a.svs[0], a.svs[1], a.dim);
    println!("instances {}", xs.len());
    println!("wrote     {}", a.out.display());
    Ok(())
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Parse => 3,
        ErrorClass::Dimension => 4,
        ErrorClass::Capacity => 5,
        ErrorClass::ConfigOrder => 6,
        ErrorClass::Io => 7,
        ErrorClass::Invalid => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Run(a) => cmd_run(a),
        Command::Report(a) => cmd_report(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.downcast_ref::<Error>().map_or(1, |e| exit_code(e.class()));
            ExitCode::from(code)
        }
    }
}
