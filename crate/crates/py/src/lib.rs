//! Python bindings. Import name: `cascade_dpr`.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cascade_dpr::cascade::{cascade_classify, CascadeSpec, CascadeStage};
use cascade_dpr::fabric::{PortKind, SwapPolicy};
use cascade_dpr::perf::{self, Calibration, SystemDescriptor};
use cascade_dpr::run::{run_in_memory, Mode, RunOptions};
use cascade_dpr::svm::{self, ClassLabel, FeatureVector, Instance};
use cascade_dpr::{Error, ErrorClass};

fn py_err(e: Error) -> PyErr {
    match e.class() {
        ErrorClass::Io => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn vector(x: Vec<f64>) -> PyResult<FeatureVector> {
    FeatureVector::new(x).map_err(py_err)
}

fn label(v: i64) -> PyResult<ClassLabel> {
    match v {
        1 => Ok(ClassLabel::Positive),
        -1 => Ok(ClassLabel::Negative),
        _ => Err(PyValueError::new_err(format!("label must be +1 or -1, got {v}"))),
    }
}

/// Accumulated weight vector and threshold of one linear SVM.
#[pyclass(name = "WeightArtifact", frozen, from_py_object)]
#[derive(Clone)]
struct PyWeightArtifact {
    inner: svm::WeightArtifact,
}

#[pymethods]
impl PyWeightArtifact {
    #[new]
    fn new(name: String, ac: Vec<f64>, bias: f64) -> PyResult<Self> {
        let inner = svm::WeightArtifact::new(name, ac, bias).map_err(py_err)?;
        Ok(PyWeightArtifact { inner })
    }

    /// Folds an SVM-Light model file into its weight vector.
    #[staticmethod]
    fn from_model_file(path: std::path::PathBuf) -> PyResult<Self> {
        let model = svm::model_file::load_model_file(&path).map_err(py_err)?;
        let inner = svm::accumulate_weights(&model).map_err(py_err)?;
        Ok(PyWeightArtifact { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = svm::parse_weight_artifact(text.as_bytes()).map_err(py_err)?;
        Ok(PyWeightArtifact { inner })
    }

    fn to_text(&self) -> String {
        String::from_utf8(svm::serialize_weight_artifact(&self.inner)).expect("artifact text is ASCII")
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn ac(&self) -> Vec<f64> {
        self.inner.ac().to_vec()
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.inner.bias()
    }

    fn decision_value(&self, x: Vec<f64>) -> PyResult<f64> {
        svm::decision_value(&self.inner, &vector(x)?).map_err(py_err)
    }

    /// Returns +1 or -1.
    fn classify(&self, x: Vec<f64>) -> PyResult<i8> {
        Ok(svm::classify(&self.inner, &vector(x)?).map_err(py_err)?.label.value())
    }

    fn __repr__(&self) -> String {
        format!(
            "WeightArtifact(name={:?}, dimension={}, bias={})",
            self.inner.name(),
            self.inner.dimension(),
            self.inner.bias()
        )
    }
}

/// Ordered stages; the first positive verdict wins.
#[pyclass(name = "Cascade", frozen)]
struct PyCascade {
    inner: CascadeSpec,
}

#[pymethods]
impl PyCascade {
    #[new]
    fn new(stages: Vec<PyWeightArtifact>) -> PyResult<Self> {
        let stages = stages
            .into_iter()
            .map(|w| CascadeStage::new(w.inner.name().to_string(), w.inner))
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?;
        Ok(PyCascade {
            inner: CascadeSpec::new(stages).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyCascade {
            inner: cascade_dpr::cascade::load_cascade(&path).map_err(py_err)?,
        })
    }

    #[getter]
    fn stages(&self) -> Vec<String> {
        self.inner.stages().iter().map(|s| s.name.clone()).collect()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    /// Returns `(label, exit_stage, distances)`.
    fn classify(&self, x: Vec<f64>) -> PyResult<(i8, usize, Vec<f64>)> {
        let r = cascade_classify(&self.inner, &vector(x)?).map_err(py_err)?;
        Ok((r.label.value(), r.exit_stage, r.per_stage_distances))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Runs `xs` through the cascade in "monolithic", "cascade" or "dpr" mode and
/// returns the run report as a dict.
#[pyfunction]
#[pyo3(signature = (cascade, xs, mode="dpr", labels=None, port="jtag", policy="lazy", timer=false, seed=None))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    cascade: &PyCascade,
    xs: Vec<Vec<f64>>,
    mode: &str,
    labels: Option<Vec<i64>>,
    port: &str,
    policy: &str,
    timer: bool,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let mode: Mode = mode.parse().map_err(py_err)?;
    if let Some(l) = &labels {
        if l.len() != xs.len() {
            return Err(PyValueError::new_err(format!("{} labels for {} instances", l.len(), xs.len())));
        }
    }
    let instances = xs
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            Ok(Instance {
                label: labels.as_ref().map(|l| label(l[i])).transpose()?,
                features: vector(x)?,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let opts = RunOptions {
        labeled: labels.is_some(),
        port: port.parse::<PortKind>().map_err(py_err)?,
        policy: policy.parse::<SwapPolicy>().map_err(py_err)?,
        timer,
        seed,
    };
    let out = py
        .detach(|| run_in_memory(mode, &cascade.inner, &instances, &opts, &Calibration::default()))
        .map_err(py_err)?;
    py.import("json")?.call_method1("loads", (out.report.to_json(),))
}

#[pyfunction]
#[pyo3(signature = (features, pipelined=true))]
fn core_latency_cycles(features: usize, pipelined: bool) -> u64 {
    let p = if pipelined {
        perf::LatencyParams::pipelined_default()
    } else {
        perf::LatencyParams::sequential_default()
    };
    perf::core_latency_cycles(features, &p)
}

#[pyfunction]
fn processing_time(cycles: u64, clock_hz: f64) -> f64 {
    perf::processing_time(cycles, clock_hz)
}

#[pyfunction]
fn speedup_vs_software(hw_time: f64, baseline_time: f64) -> PyResult<f64> {
    perf::speedup_vs_software(hw_time, baseline_time).map_err(py_err)
}

#[pyfunction]
fn utilization_percent(used: u64, capacity: u64) -> PyResult<String> {
    if capacity == 0 {
        return Err(PyValueError::new_err("capacity must be positive"));
    }
    Ok(perf::utilization_percent(used, capacity))
}

fn descriptor(cores: u32, dpr: bool, timer: bool, variant: Option<String>) -> SystemDescriptor {
    let d = if dpr { SystemDescriptor::dpr() } else { SystemDescriptor::cascade(cores) }.with_timer(timer);
    match variant {
        Some(v) => d.with_variant(v),
        None => d,
    }
}

/// Resource footprint as a dict of slices, luts, lut_ram, bram, dsp.
#[pyfunction]
#[pyo3(signature = (cores=1, dpr=false, timer=false, variant=None))]
fn estimate_resources<'py>(
    py: Python<'py>,
    cores: u32,
    dpr: bool,
    timer: bool,
    variant: Option<String>,
) -> PyResult<Bound<'py, PyDict>> {
    let cal = Calibration::default();
    let fp = perf::estimate_resources(&descriptor(cores, dpr, timer, variant), &cal.resources, &cal.device)
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("slices", fp.slices)?;
    d.set_item("luts", fp.luts)?;
    d.set_item("lut_ram", fp.lut_ram)?;
    d.set_item("bram", fp.bram)?;
    d.set_item("dsp", fp.dsp)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (cores=1, dpr=false))]
fn estimate_power<'py>(py: Python<'py>, cores: u32, dpr: bool) -> PyResult<Bound<'py, PyDict>> {
    let p = perf::estimate_power(&descriptor(cores, dpr, false, None), &Calibration::default().power)
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("total_watts", p.total_watts)?;
    d.set_item("static_watts", p.static_watts)?;
    d.set_item("ps_dynamic_watts", p.ps_dynamic_watts)?;
    d.set_item("pl_dynamic_watts", p.pl_dynamic_watts)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "cascade_dpr")]
fn cascade_dpr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyWeightArtifact>()?;
    m.add_class::<PyCascade>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(core_latency_cycles, m)?)?;
    m.add_function(wrap_pyfunction!(processing_time, m)?)?;
    m.add_function(wrap_pyfunction!(speedup_vs_software, m)?)?;
    m.add_function(wrap_pyfunction!(utilization_percent, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_resources, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_power, m)?)?;
    Ok(())
}
