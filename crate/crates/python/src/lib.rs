use std::collections::BTreeMap;
use std::path::PathBuf;

use ::airload as core;
use core::analysis::{self, LoadingPlan, ValidationReport};
use core::bench::{emit_report, run_benchmark, BenchConfig, ReportFormat};
use core::qubo::{assemble_with, calibrate_weights, AssemblyOptions, PenaltyWeights, QuadraticModel};
use core::solvers::{self, SolverParams};
use core::{ConstraintSet, ProblemInstance};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_set(s: &str) -> PyResult<ConstraintSet> {
    s.parse().map_err(err)
}

/// A loading problem: containers, aircraft parameters and active constraints.
#[pyclass(name = "Instance", module = "airload", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: ProblemInstance,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: core::io::load_instance(&path).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, name = "instance"))]
    fn from_toml(text: &str, name: &str) -> PyResult<Self> {
        Ok(Self { inner: core::io::parse_instance(text, name, None).map_err(err)? })
    }

    fn to_toml(&self) -> String {
        core::io::emit_instance(&self.inner)
    }

    /// Copy with another constraint set: "none", "pl", "pl+cl" or "pl+cl+sl".
    fn with_constraints(&self, set: &str) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_constraints(parse_set(set)?).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn constraints(&self) -> String {
        self.inner.constraints().label()
    }

    #[getter]
    fn num_containers(&self) -> usize {
        self.inner.num_containers()
    }

    #[getter]
    fn num_positions(&self) -> usize {
        self.inner.num_positions()
    }

    /// `(id, type code, mass)` per container.
    #[getter]
    fn containers(&self) -> Vec<(u32, u8, f64)> {
        self.inner.containers().iter().map(|c| (c.id, c.ctype.code(), c.mass)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(name={:?}, containers={}, positions={}, constraints={:?})",
            self.inner.name(),
            self.inner.num_containers(),
            self.inner.num_positions(),
            self.inner.constraints().label()
        )
    }
}

/// Penalty weights for every constraint family.
#[pyclass(name = "Weights", module = "airload", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWeights {
    inner: PenaltyWeights,
}

#[pymethods]
impl PyWeights {
    /// Weights scaled from the instance's masses and geometry.
    #[staticmethod]
    fn scaled(instance: &PyInstance) -> Self {
        Self { inner: PenaltyWeights::scaled(&instance.inner) }
    }

    #[staticmethod]
    #[pyo3(signature = (instance, samples = 1000, seed = 0))]
    fn calibrate(instance: &PyInstance, samples: usize, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: calibrate_weights(&instance.inner, samples, seed).map_err(err)? })
    }

    #[staticmethod]
    fn uniform(value: f64) -> Self {
        Self { inner: PenaltyWeights::uniform(value) }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: PenaltyWeights::from_toml_str(text).map_err(err)? })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    fn to_dict(&self) -> BTreeMap<&'static str, f64> {
        let w = &self.inner;
        BTreeMap::from([
            ("p_overlap", w.p_overlap),
            ("p_dup", w.p_dup),
            ("p_contig", w.p_contig),
            ("p_capacity", w.p_capacity),
            ("p_cog_target", w.p_cog_target),
            ("p_cog_lower", w.p_cog_lower),
            ("p_cog_upper", w.p_cog_upper),
            ("p_shear_left", w.p_shear_left),
            ("p_shear_right", w.p_shear_right),
        ])
    }
}

/// Decoded placement of containers on positions.
#[pyclass(name = "Plan", module = "airload", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPlan {
    inner: LoadingPlan,
}

#[pymethods]
impl PyPlan {
    /// Plan from `{container id: [positions]}`, positions 1-based.
    #[staticmethod]
    fn from_placements(instance: &PyInstance, placements: BTreeMap<u32, Vec<usize>>) -> PyResult<Self> {
        Ok(Self { inner: LoadingPlan::from_placements(&instance.inner, placements).map_err(err)? })
    }

    #[getter]
    fn placement(&self) -> BTreeMap<u32, Vec<usize>> {
        self.inner.placement.iter().cloned().collect()
    }

    /// Container ids at each position, position 1 first.
    #[getter]
    fn occupancy(&self) -> Vec<Vec<u32>> {
        self.inner.occupancy.clone()
    }

    fn __repr__(&self) -> String {
        format!("Plan(occupancy={:?})", self.inner.occupancy)
    }
}

#[pyclass(name = "Report", module = "airload", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyReport {
    pl_valid: bool,
    cl_valid: bool,
    sl_valid: bool,
    shear_violations: usize,
    cog: f64,
    loaded_weight: f64,
    overlap_ok: bool,
    duplicates_ok: bool,
    contiguity_ok: bool,
    capacity_ok: bool,
    feasible: bool,
}

impl PyReport {
    fn new(r: &ValidationReport, instance: &ProblemInstance) -> Self {
        Self {
            pl_valid: r.pl_valid,
            cl_valid: r.cl_valid,
            sl_valid: r.sl_valid,
            shear_violations: r.shear_violations,
            cog: r.cog,
            loaded_weight: r.loaded_weight,
            overlap_ok: r.overlap_ok,
            duplicates_ok: r.duplicates_ok,
            contiguity_ok: r.contiguity_ok,
            capacity_ok: r.capacity_ok,
            feasible: r.feasible_for(instance),
        }
    }
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!(
            "Report(feasible={}, loaded_weight={}, cog={:.4}, shear_violations={})",
            self.feasible, self.loaded_weight, self.cog, self.shear_violations
        )
    }
}

/// QUBO model assembled from an instance and penalty weights.
#[pyclass(name = "Model", module = "airload", frozen, skip_from_py_object)]
struct PyModel {
    inner: QuadraticModel,
    instance: ProblemInstance,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (instance, weights = None, capacity = true))]
    fn new(instance: &PyInstance, weights: Option<&PyWeights>, capacity: bool) -> PyResult<Self> {
        let w = weights.map(|w| w.inner.clone()).unwrap_or_else(|| PenaltyWeights::scaled(&instance.inner));
        let inner = assemble_with(&instance.inner, &w, &AssemblyOptions { capacity }).map_err(err)?;
        Ok(Self { inner, instance: instance.inner.clone() })
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    #[getter]
    fn num_position_vars(&self) -> usize {
        self.inner.registry().num_position_vars()
    }

    #[getter]
    fn num_slack_vars(&self) -> usize {
        self.inner.registry().num_slack_vars()
    }

    #[getter]
    fn num_terms(&self) -> usize {
        self.inner.num_terms()
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.inner.offset()
    }

    fn energy(&self, bits: Vec<bool>) -> PyResult<f64> {
        self.inner.energy(&bits).map_err(err)
    }

    /// Energy split by family.
    fn breakdown(&self, bits: Vec<bool>) -> PyResult<BTreeMap<String, f64>> {
        if bits.len() != self.inner.num_vars() {
            return Err(PyValueError::new_err(format!("expected {} bits, got {}", self.inner.num_vars(), bits.len())));
        }
        Ok(self.inner.breakdown(&bits).into_iter().map(|(k, v)| (format!("{k:?}"), v)).collect())
    }

    /// Stored upper-triangular entries `(i, j, q)`.
    fn coefficients(&self) -> Vec<(usize, usize, f64)> {
        self.inner.coefficients().map(|((i, j), q)| (i, j, q)).collect()
    }

    /// The sparse text export.
    fn to_qubo(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_qubo(&mut buf).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(String::from_utf8(buf).expect("ascii"))
    }

    fn decode(&self, bits: Vec<bool>) -> PyResult<PyPlan> {
        Ok(PyPlan { inner: analysis::decode(&bits, self.inner.registry(), &self.instance).map_err(err)? })
    }
}

#[pyclass(name = "Solution", module = "airload", frozen, get_all)]
struct PySolution {
    bits: Vec<bool>,
    energy: f64,
    iterations_used: usize,
    wall_time: f64,
    plan: PyPlan,
    report: PyReport,
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!("Solution(energy={}, {})", self.energy, self.report.__repr__())
    }
}

/// Tabu search on a model; unset parameters take size-based defaults.
#[pyfunction]
#[pyo3(signature = (model, seed = 0, iterations = None, tenure = None, restarts = None))]
fn solve(
    py: Python<'_>,
    model: &PyModel,
    seed: u64,
    iterations: Option<usize>,
    tenure: Option<usize>,
    restarts: Option<usize>,
) -> PyResult<PySolution> {
    let mut params = SolverParams::for_model(&model.inner, seed);
    if let Some(v) = iterations {
        params.max_iterations = v;
    }
    if let Some(v) = tenure {
        params.tabu_tenure = v;
    }
    if let Some(v) = restarts {
        params.restarts = v;
    }
    let sol = py.detach(|| solvers::tabu_solve(&model.inner, &params)).map_err(err)?;
    let plan = analysis::decode(&sol.bits, model.inner.registry(), &model.instance).map_err(err)?;
    let report = analysis::validate(&plan, &model.instance).map_err(err)?;
    Ok(PySolution {
        report: PyReport::new(&report, &model.instance),
        plan: PyPlan { inner: plan },
        bits: sol.bits,
        energy: sol.energy,
        iterations_used: sol.iterations_used,
        wall_time: sol.wall_time,
    })
}

/// Heaviest valid plan by exhaustive search: `(plan, weight, report)`.
#[pyfunction]
#[pyo3(signature = (instance, force = false))]
fn exact(py: Python<'_>, instance: &PyInstance, force: bool) -> PyResult<(PyPlan, f64, PyReport)> {
    let sol = py.detach(|| solvers::exact_solve(&instance.inner, force)).map_err(err)?;
    let report = PyReport::new(&sol.report, &instance.inner);
    Ok((PyPlan { inner: sol.plan }, sol.weight, report))
}

#[pyfunction]
fn validate(instance: &PyInstance, plan: &PyPlan) -> PyResult<PyReport> {
    let r = analysis::validate(&plan.inner, &instance.inner).map_err(err)?;
    Ok(PyReport::new(&r, &instance.inner))
}

/// `(side, station, x, value, limit, violated)` per shear station.
#[pyfunction]
fn shear_profile(instance: &PyInstance, plan: &PyPlan) -> Vec<(String, usize, f64, f64, f64, bool)> {
    analysis::shear_profile(&plan.inner, &instance.inner)
        .into_iter()
        .map(|c| (format!("{:?}", c.side), c.station, c.x, c.value, c.limit, c.violated))
        .collect()
}

/// Seeded repeated solves; returns the structured report as JSON text.
#[pyfunction]
#[pyo3(signature = (instance, runs, seed = 0, weights = None, optimum = None, capacity = true))]
fn benchmark(
    py: Python<'_>,
    instance: &PyInstance,
    runs: usize,
    seed: u64,
    weights: Option<&PyWeights>,
    optimum: Option<f64>,
    capacity: bool,
) -> PyResult<String> {
    let w = weights.map(|w| w.inner.clone()).unwrap_or_else(|| PenaltyWeights::scaled(&instance.inner));
    let mut config = BenchConfig::new(runs, seed);
    config.exact_optimum = optimum;
    config.assembly = AssemblyOptions { capacity };
    let report = py.detach(|| run_benchmark(&instance.inner, &w, &config)).map_err(err)?;
    Ok(emit_report(&report, ReportFormat::Structured, true))
}

#[pymodule]
#[pyo3(name = "airload")]
fn airload_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyWeights>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyPlan>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(exact, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(shear_profile, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    Ok(())
}
