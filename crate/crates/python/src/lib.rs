//! Python bindings for `gfgroup-core`.
//!
//! Plans and reports cross the boundary as plain dicts (via JSON), so their
//! layout matches the CLI output exactly.

use std::fs::File;
use std::io::BufWriter;

use gfgroup_core::{
    self as core, FramePlane, GfGroupMetrics, GfGroupPlan, PlannerConfig, RdCurve, RdPoint,
    SearchConfig, SearchKind, StillnessThresholds, SynthKind, SynthSpec, Verdict, VideoSequence,
    DEFAULT_BUFFER_SLOTS,
};
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = value
        .py()
        .import("json")?
        .call_method1("dumps", (value,))?
        .extract()?;
    serde_json::from_str(&text).map_err(value_err)
}

/// A single 8-bit luma plane.
#[pyclass(name = "Frame", module = "gfgroup", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyFrame(FramePlane);

#[pymethods]
impl PyFrame {
    #[new]
    fn new(width: usize, height: usize, data: &[u8]) -> PyResult<Self> {
        FramePlane::new(width, height, data.to_vec())
            .map(Self)
            .map_err(value_err)
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, value: u8) -> PyResult<Self> {
        FramePlane::filled(width, height, value)
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn tobytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.samples())
    }

    fn __repr__(&self) -> String {
        format!("Frame({}x{})", self.0.width(), self.0.height())
    }
}

/// An ordered run of luma frames.
#[pyclass(name = "Sequence", module = "gfgroup", frozen)]
pub struct PySequence(VideoSequence);

#[pymethods]
impl PySequence {
    #[new]
    fn new(frames: Vec<PyFrame>) -> PyResult<Self> {
        let frames = frames.into_iter().map(|f| f.0).collect();
        VideoSequence::new(frames, Default::default(), String::new())
            .map(Self)
            .map_err(value_err)
    }

    #[staticmethod]
    fn load_y4m(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let mut seq = core::load_y4m(file).map_err(value_err)?;
        seq.source_name = path.to_owned();
        Ok(Self(seq))
    }

    #[staticmethod]
    fn from_y4m_bytes(data: &[u8]) -> PyResult<Self> {
        core::load_y4m(data).map(Self).map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (kind, width=176, height=144, frames=17, amplitude=0.0, seed=0))]
    fn synth(
        kind: &str,
        width: usize,
        height: usize,
        frames: usize,
        amplitude: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let kind: SynthKind = kind.parse().map_err(PyValueError::new_err)?;
        let spec = SynthSpec::new(kind, width, height, frames)
            .amplitude(amplitude)
            .seed(seed);
        core::generate(&spec).map(Self).map_err(value_err)
    }

    fn to_y4m_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let mut out = Vec::new();
        core::write_y4m(&self.0, &mut out).map_err(value_err)?;
        Ok(PyBytes::new(py, &out))
    }

    fn save_y4m(&self, path: &str) -> PyResult<usize> {
        let file = File::create(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        core::write_y4m(&self.0, &mut BufWriter::new(file))
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn frame(&self, index: usize) -> PyResult<PyFrame> {
        self.0
            .frames()
            .get(index)
            .cloned()
            .map(PyFrame)
            .ok_or_else(|| PyIndexError::new_err(format!("frame {index} out of range")))
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Sequence({} frames, {}x{})",
            self.0.len(),
            self.0.width(),
            self.0.height()
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn planner_config(
    block_size: usize,
    search_range: i32,
    search: &str,
    target_interval: usize,
    key_interval: Option<usize>,
    zm_min: f64,
    ape_max: f64,
    aes_max: f64,
) -> PyResult<PlannerConfig> {
    let search_kind = match search {
        "exhaustive" => SearchKind::Exhaustive,
        "diamond" => SearchKind::Diamond,
        other => return Err(value_err(format!("unknown search `{other}`"))),
    };
    let cfg = PlannerConfig {
        search: SearchConfig {
            block_size,
            search_range,
            search_kind,
        },
        thresholds: StillnessThresholds {
            zero_motion_min: zm_min,
            pixel_error_max: ape_max,
            error_stdev_max: aes_max,
        },
        target_interval,
        key_interval,
    };
    cfg.search.validate().map_err(value_err)?;
    cfg.thresholds.validate().map_err(value_err)?;
    Ok(cfg)
}

/// Per-group stillness metrics and verdicts.
#[pyfunction]
#[pyo3(signature = (
    seq, *, block_size=16, search_range=8, search="exhaustive", target_interval=16,
    key_interval=None, zm_min=0.9, ape_max=40.0, aes_max=2000.0
))]
#[allow(clippy::too_many_arguments)]
fn analyze<'py>(
    py: Python<'py>,
    seq: &PySequence,
    block_size: usize,
    search_range: i32,
    search: &str,
    target_interval: usize,
    key_interval: Option<usize>,
    zm_min: f64,
    ape_max: f64,
    aes_max: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = planner_config(
        block_size,
        search_range,
        search,
        target_interval,
        key_interval,
        zm_min,
        ape_max,
        aes_max,
    )?;
    let groups = py
        .detach(|| core::analyze_groups(&seq.0, &cfg))
        .map_err(value_err)?;
    groups
        .iter()
        .map(|g| {
            let d = PyDict::new(py);
            d.set_item("group_id", g.group_id)?;
            d.set_item("first_display_index", g.first_display_index)?;
            d.set_item("interval", g.metrics.interval)?;
            d.set_item("zero_motion_accumulator", g.metrics.zero_motion_accumulator)?;
            d.set_item("avg_pixel_error", g.metrics.avg_pixel_error)?;
            d.set_item("avg_error_stdev", g.metrics.avg_error_stdev)?;
            d.set_item("verdict", g.verdict.as_str())?;
            Ok(d)
        })
        .collect()
}

/// The adaptive coding plan for every group, in the CLI's JSON layout.
#[pyfunction]
#[pyo3(signature = (
    seq, *, block_size=16, search_range=8, search="exhaustive", target_interval=16,
    key_interval=None, zm_min=0.9, ape_max=40.0, aes_max=2000.0
))]
#[allow(clippy::too_many_arguments)]
fn plan<'py>(
    py: Python<'py>,
    seq: &PySequence,
    block_size: usize,
    search_range: i32,
    search: &str,
    target_interval: usize,
    key_interval: Option<usize>,
    zm_min: f64,
    ape_max: f64,
    aes_max: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = planner_config(
        block_size,
        search_range,
        search,
        target_interval,
        key_interval,
        zm_min,
        ape_max,
        aes_max,
    )?;
    let plans = py
        .detach(|| core::plan_sequence(&seq.0, &cfg))
        .map_err(value_err)?;
    to_py(py, &plans)
}

fn parse_verdict(verdict: &str) -> PyResult<Verdict> {
    verdict.parse().map_err(value_err)
}

/// Plan for one group of `interval` frames; `verdict` is "still" or "non-still".
#[pyfunction]
fn plan_group<'py>(py: Python<'py>, interval: usize, verdict: &str) -> PyResult<Bound<'py, PyAny>> {
    let plan = core::plan_group(interval, parse_verdict(verdict)?).map_err(value_err)?;
    to_py(py, &plan)
}

/// Checks a plan dict against a reference buffer of `slots` entries.
#[pyfunction]
#[pyo3(signature = (plan, slots=DEFAULT_BUFFER_SLOTS))]
fn validate_plan<'py>(plan: &Bound<'py, PyAny>, slots: usize) -> PyResult<Bound<'py, PyAny>> {
    let parsed: GfGroupPlan = from_py(plan)?;
    to_py(plan.py(), &core::validate_plan(&parsed, slots))
}

#[pyfunction]
#[pyo3(signature = (
    zero_motion_accumulator, avg_pixel_error, avg_error_stdev, *,
    zm_min=0.9, ape_max=40.0, aes_max=2000.0
))]
fn classify(
    zero_motion_accumulator: f64,
    avg_pixel_error: f64,
    avg_error_stdev: f64,
    zm_min: f64,
    ape_max: f64,
    aes_max: f64,
) -> PyResult<&'static str> {
    let thresholds = StillnessThresholds {
        zero_motion_min: zm_min,
        pixel_error_max: ape_max,
        error_stdev_max: aes_max,
    };
    thresholds.validate().map_err(value_err)?;
    let metrics = GfGroupMetrics {
        interval: 0,
        zero_motion_accumulator,
        avg_pixel_error,
        avg_error_stdev,
    };
    Ok(core::classify_stillness(&metrics, &thresholds).as_str())
}

#[pyfunction]
fn psnr(a: &PyFrame, b: &PyFrame) -> PyResult<f64> {
    core::psnr(&a.0, &b.0).map_err(value_err)
}

#[pyfunction]
fn ssim(a: &PyFrame, b: &PyFrame) -> PyResult<f64> {
    core::ssim(&a.0, &b.0).map_err(value_err)
}

/// Per-frame and mean PSNR/SSIM as a dict.
#[pyfunction]
fn sequence_quality<'py>(
    py: Python<'py>,
    reference: &PySequence,
    distorted: &PySequence,
) -> PyResult<Bound<'py, PyAny>> {
    let report = py
        .detach(|| core::sequence_quality(&reference.0, &distorted.0))
        .map_err(value_err)?;
    to_py(py, &report)
}

fn curve(points: Vec<(f64, f64)>) -> PyResult<RdCurve> {
    RdCurve::new(
        points
            .into_iter()
            .map(|(r, q)| RdPoint::new(r, q))
            .collect(),
    )
    .map_err(value_err)
}

/// BD-rate in percent of `test` against `base`; curves are `(bitrate, quality)` pairs.
#[pyfunction]
fn bd_rate(base: Vec<(f64, f64)>, test: Vec<(f64, f64)>) -> PyResult<f64> {
    core::bd_rate(&curve(base)?, &curve(test)?).map_err(value_err)
}

#[pymodule]
pub fn gfgroup(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyFrame>()?;
    m.add_class::<PySequence>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(plan_group, m)?)?;
    m.add_function(wrap_pyfunction!(validate_plan, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_quality, m)?)?;
    m.add_function(wrap_pyfunction!(bd_rate, m)?)?;
    Ok(())
}
