//! Python bindings for `phasechain`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use phasechain::chain::{self, ChainState, Mode, TamperOp};
use phasechain::config::parse_config;
use phasechain::consensus::run_trials as run_trials_core;
use phasechain::encoding::{self as enc, BitPair, BlockCodec, BlockEncoding};
use phasechain::quantum::{RandomSource, UnitaryMatrix};

fn err(e: phasechain::Error) -> PyErr {
    if e.is_constraint() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "spatial" => Ok(Mode::Spatial),
        "temporal" => Ok(Mode::Temporal),
        other => Err(PyValueError::new_err(format!("mode must be 'spatial' or 'temporal', got {other:?}"))),
    }
}

fn parse_strings(strings: &[String]) -> PyResult<Vec<BitPair>> {
    strings.iter().map(|s| s.parse().map_err(err)).collect()
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Per-block phase schedule `θ_i = θ1 / n^(i-1)`.
#[pyclass(name = "PhaseSchedule", module = "pyphasechain", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySchedule(enc::PhaseSchedule);

#[pymethods]
impl PySchedule {
    #[new]
    fn new(theta1: f64, ratio: u32) -> PyResult<Self> {
        enc::PhaseSchedule::new(theta1, ratio).map(PySchedule).map_err(err)
    }

    #[getter]
    fn theta1(&self) -> f64 {
        self.0.theta1()
    }

    #[getter]
    fn ratio(&self) -> u32 {
        self.0.ratio()
    }

    fn phase_at(&self, index: usize) -> PyResult<f64> {
        self.0.phase_at(index).map_err(err)
    }

    fn cumulative_phase(&self, m: usize) -> f64 {
        self.0.cumulative_phase(m)
    }

    fn budget(&self) -> f64 {
        self.0.budget()
    }

    #[staticmethod]
    fn theta1_bound(ratio: u32) -> f64 {
        enc::PhaseSchedule::theta1_bound(ratio)
    }

    fn __repr__(&self) -> String {
        format!("PhaseSchedule(theta1={}, ratio={})", self.0.theta1(), self.0.ratio())
    }
}

/// Amplitudes of the two-qubit state for block `index` carrying `bits`.
#[pyfunction]
fn block_state(schedule: &PySchedule, index: usize, bits: &str) -> PyResult<Vec<Complex64>> {
    let b = BlockEncoding::scheduled(&schedule.0, index, bits.parse().map_err(err)?).map_err(err)?;
    Ok(enc::block_state(&b).into_amplitudes())
}

/// Encodes payloads with the identity codec: `[(index, bits, theta), ...]`.
#[pyfunction]
fn encode(schedule: &PySchedule, payloads: Vec<String>) -> PyResult<Vec<(usize, String, f64)>> {
    let codec = BlockCodec::identity();
    payloads
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let b = enc::encode_block(&codec, &schedule.0, &p.parse().map_err(err)?, i + 1).map_err(err)?;
            Ok((b.index, b.bits.to_string(), b.theta))
        })
        .collect()
}

/// A local copy of the GHZ chain.
#[pyclass(name = "Chain", module = "pyphasechain", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChain(ChainState);

#[pymethods]
impl PyChain {
    /// Honest chain for `strings` (e.g. `["00", "10", "11"]`).
    #[staticmethod]
    #[pyo3(signature = (schedule, strings, mode = "spatial"))]
    fn reconstruct(schedule: &PySchedule, strings: Vec<String>, mode: &str) -> PyResult<Self> {
        chain::reconstruct(&schedule.0, &parse_strings(&strings)?, parse_mode(mode)?)
            .map(PyChain)
            .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ChainState::from_json(text).map(PyChain).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    /// Appends the next scheduled block.
    fn fuse(&self, bits: &str) -> PyResult<Self> {
        let b = BlockEncoding::scheduled(self.0.schedule(), self.0.block_count() + 1, bits.parse().map_err(err)?)
            .map_err(err)?;
        self.0.fuse_block(b).map(PyChain).map_err(err)
    }

    #[getter]
    fn mode(&self) -> String {
        self.0.mode().to_string()
    }

    #[getter]
    fn block_count(&self) -> usize {
        self.0.block_count()
    }

    #[getter]
    fn qubit_count(&self) -> usize {
        self.0.qubit_count()
    }

    #[getter]
    fn cumulative_phase(&self) -> f64 {
        self.0.cumulative_phase()
    }

    #[getter]
    fn branch0(&self) -> String {
        self.0.branch0_label()
    }

    #[getter]
    fn branch1(&self) -> String {
        self.0.branch1_label()
    }

    #[getter]
    fn strings(&self) -> Vec<String> {
        self.0.strings().iter().map(ToString::to_string).collect()
    }

    #[getter]
    fn timestamps(&self) -> Vec<usize> {
        self.0.timestamps()
    }

    #[getter]
    fn absorbed_count(&self) -> usize {
        self.0.absorbed_count()
    }

    #[getter]
    fn tampered(&self) -> bool {
        self.0.is_tampered()
    }

    /// Amplitudes of the live qubits.
    fn realize(&self) -> PyResult<Vec<Complex64>> {
        self.0.realize().map(|s| s.into_amplitudes()).map_err(err)
    }

    /// Born probability that a validity check returns Plus, using the
    /// chain's own strings.
    fn plus_probability(&self) -> PyResult<f64> {
        chain::plus_probability(&self.0, self.0.schedule(), &self.0.strings()).map_err(err)
    }

    /// One validity measurement: `(outcome, valid, plus_probability, chain_after)`.
    #[pyo3(signature = (seed, stream = 0))]
    fn check_validity(&self, seed: u64, stream: u64) -> PyResult<(String, bool, f64, PyChain)> {
        let mut rng = RandomSource::new(seed, stream);
        let (v, next) = chain::check_validity(&self.0, self.0.schedule(), &self.0.strings(), &mut rng).map_err(err)?;
        let outcome = format!("{:?}", v.outcome).to_lowercase();
        Ok((outcome, v.valid, v.plus_probability, PyChain(next)))
    }

    /// `kind` is `measure-qubit`, `phase-shift` (needs `delta`) or one of
    /// the named unitaries `x`, `y`, `z`, `h`.
    #[pyo3(signature = (kind, target, delta = None, seed = 0, stream = 0))]
    fn tamper(&self, kind: &str, target: usize, delta: Option<f64>, seed: u64, stream: u64) -> PyResult<PyChain> {
        let op = match (kind, delta) {
            ("measure-qubit", _) => TamperOp::MeasureQubit { target },
            ("phase-shift", Some(delta)) => TamperOp::PhaseShift { target, delta },
            ("phase-shift", None) => return Err(PyValueError::new_err("phase-shift needs delta")),
            ("x", _) => TamperOp::LocalUnitary { target, u: UnitaryMatrix::pauli_x() },
            ("y", _) => TamperOp::LocalUnitary { target, u: UnitaryMatrix::pauli_y() },
            ("z", _) => TamperOp::LocalUnitary { target, u: UnitaryMatrix::pauli_z() },
            ("h", _) => TamperOp::LocalUnitary { target, u: UnitaryMatrix::hadamard() },
            (other, _) => return Err(PyValueError::new_err(format!("unknown tamper kind {other:?}"))),
        };
        let mut rng = RandomSource::new(seed, stream);
        chain::apply_tamper(&self.0, &op, &mut rng).map(PyChain).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Chain(mode={}, blocks={}, branch0={:?}, theta={})",
            self.0.mode(),
            self.0.block_count(),
            self.0.branch0_label(),
            self.0.cumulative_phase()
        )
    }
}

/// Parses a TOML scenario and returns it as a dict of its key settings.
#[pyfunction]
fn check_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = parse_config(text).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("theta1", cfg.schedule.theta1())?;
    d.set_item("n", cfg.schedule.ratio())?;
    d.set_item("nodes", cfg.nodes)?;
    d.set_item("k", cfg.k)?;
    d.set_item("trials", cfg.trials)?;
    d.set_item("seed", cfg.seed)?;
    d.set_item("mode", cfg.mode.to_string())?;
    d.set_item("strategy", cfg.creator_strategy.name())?;
    Ok(d)
}

/// Runs the consensus trials of a TOML scenario and returns the summary.
#[pyfunction]
fn run_trials<'py>(py: Python<'py>, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = parse_config(config).map_err(err)?;
    let codec = cfg.codec.build(cfg.payloads.len().max(1), |p| {
        std::fs::read_to_string(p).map_err(|e| phasechain::Error::Config(format!("{p}: {e}")))
    });
    let codec = codec.map_err(err)?;
    let summary = py.detach(|| run_trials_core(&cfg, &codec)).map_err(err)?;
    let text = serde_json::to_string(&summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &text)
}

#[pymodule]
mod pyphasechain {
    #[pymodule_export]
    use super::{block_state, check_config, encode, run_trials, PyChain, PySchedule};
}
