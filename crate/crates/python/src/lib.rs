//! Python bindings for `fracfield`.
//!
//! Fields cross the boundary as plain lists of nodal values; heavy calls
//! release the interpreter while they run.

use std::path::PathBuf;

use fracfield::dynamics::{self, SolverSettings, Trajectory as CoreTrajectory};
use fracfield::experiments::{self, RunError, RunOptions};
use fracfield::fracop::{self, FracOperator};
use fracfield::grid::{self, Domain1D, Field};
use fracfield::{spectral, stationary, Error, PotentialParams};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidDomain(_)
        | Error::NonFiniteSample { .. }
        | Error::OutOfRange(_)
        | Error::DomainMismatch
        | Error::CompatibilityViolation { .. }
        | Error::InvalidSequence(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Uniform grid of `m` interior nodes on `(a, b)`.
#[pyclass(name = "Domain", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyDomain(Domain1D);

#[pymethods]
impl PyDomain {
    #[new]
    fn new(a: f64, b: f64, m: usize) -> PyResult<Self> {
        Domain1D::new(a, b, m).map(Self).map_err(to_py)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.nodes()
    }

    /// The default smooth bump datum.
    #[pyo3(signature = (amplitude = 1.0))]
    fn bump(&self, amplitude: f64) -> Vec<f64> {
        grid::bump(self.0, amplitude).values().as_slice().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Domain(a={}, b={}, m={})", self.0.a(), self.0.b(), self.0.m())
    }
}

impl PyDomain {
    fn field(&self, values: Vec<f64>) -> PyResult<Field> {
        Field::from_vec(self.0, values).map_err(to_py)
    }
}

/// Assembled fractional Laplacian of order `r`.
#[pyclass(name = "Operator", frozen)]
struct PyOperator {
    op: FracOperator,
}

#[pymethods]
impl PyOperator {
    #[new]
    fn new(py: Python<'_>, domain: PyDomain, r: f64) -> PyResult<Self> {
        let op = py.detach(|| fracop::assemble(domain.0, r)).map_err(to_py)?;
        Ok(Self { op })
    }

    #[getter]
    fn order(&self) -> f64 {
        self.op.order()
    }

    #[getter]
    fn domain(&self) -> PyDomain {
        PyDomain(*self.op.domain())
    }

    fn stiffness(&self) -> Vec<Vec<f64>> {
        let a = self.op.stiffness();
        (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
    }

    fn mass(&self) -> Vec<Vec<f64>> {
        let m = self.op.mass();
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }

    /// `A v`.
    fn apply(&self, v: Vec<f64>) -> PyResult<Vec<f64>> {
        let f = self.domain().field(v)?;
        Ok(fracop::apply(&self.op, &f).map_err(to_py)?.as_slice().to_vec())
    }

    /// Solves `A u = M_c f`.
    fn solve(&self, f: Vec<f64>) -> PyResult<Vec<f64>> {
        let f = self.domain().field(f)?;
        Ok(fracop::solve(&self.op, &f).map_err(to_py)?.values().as_slice().to_vec())
    }

    fn energy_norm_sq(&self, v: Vec<f64>) -> PyResult<f64> {
        let f = self.domain().field(v)?;
        Ok(self.op.energy_norm_sq(f.values()))
    }

    fn dual_norm_sq(&self, v: Vec<f64>) -> PyResult<f64> {
        let f = self.domain().field(v)?;
        fracop::dual_norm_sq(&self.op, &f).map_err(to_py)
    }

    /// `(lambda1, e1)` with `e1` normalised in the consistent mass.
    fn first_eigenpair(&self, py: Python<'_>) -> PyResult<(f64, Vec<f64>)> {
        let pair = py.detach(|| spectral::first_eigenpair(&self.op)).map_err(to_py)?;
        Ok((pair.lambda1, pair.e1.values().as_slice().to_vec()))
    }

    fn __repr__(&self) -> String {
        format!("Operator(r={}, m={})", self.op.order(), self.op.domain().m())
    }
}

/// Power-law nonlinearity `β(v) = |v|^{p-2} v`.
#[pyclass(name = "Potential", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyPotential(PotentialParams);

#[pymethods]
impl PyPotential {
    #[new]
    #[pyo3(signature = (p, lam = 1.0, delta = fracfield::potential::DEFAULT_DELTA))]
    fn new(p: f64, lam: f64, delta: f64) -> PyResult<Self> {
        PotentialParams::with(p, lam, delta, 1.0).map(Self).map_err(to_py)
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda
    }

    fn beta(&self, v: f64) -> f64 {
        self.0.beta(v)
    }

    fn beta_hat(&self, v: f64) -> f64 {
        self.0.beta_hat(v)
    }

    /// `E(u) = ½ uᵀA_σu + Σ h β̂(u_i) − (λ/2) uᵀM_c u`.
    fn energy(&self, op_sigma: &PyOperator, u: Vec<f64>) -> PyResult<f64> {
        let f = op_sigma.domain().field(u)?;
        dynamics::energy(&op_sigma.op, &self.0, &f).map_err(to_py)
    }
}

/// Result of an evolution run.
#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory(CoreTrajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        self.0.u.iter().map(|f| f.values().as_slice().to_vec()).collect()
    }

    #[getter]
    fn w(&self) -> Vec<Vec<f64>> {
        self.0.w.iter().map(|f| f.values().as_slice().to_vec()).collect()
    }

    #[getter]
    fn e_sigma(&self) -> Vec<f64> {
        self.0.trace.rows.iter().map(|r| r.e_sigma).collect()
    }

    #[getter]
    fn step_slack(&self) -> Vec<f64> {
        self.0.trace.rows.iter().map(|r| r.step_slack).collect()
    }

    fn min_slack(&self) -> f64 {
        self.0.min_slack()
    }

    fn __len__(&self) -> usize {
        self.0.u.len()
    }
}

/// Cahn-Hilliard evolution from `u0` with step `tau` up to time `t_final`.
#[pyfunction]
fn ch_evolve(
    py: Python<'_>,
    op_s: &PyOperator,
    op_sigma: &PyOperator,
    potential: PyPotential,
    u0: Vec<f64>,
    tau: f64,
    t_final: f64,
) -> PyResult<PyTrajectory> {
    let u0 = op_s.domain().field(u0)?;
    let settings = SolverSettings::new(tau, t_final).map_err(to_py)?;
    py.detach(|| dynamics::ch_evolve(&op_s.op, &op_sigma.op, &potential.0, &u0, &settings))
        .map(PyTrajectory)
        .map_err(to_py)
}

#[pyfunction]
fn ac_evolve(py: Python<'_>, op_sigma: &PyOperator, potential: PyPotential, u0: Vec<f64>, tau: f64, t_final: f64) -> PyResult<PyTrajectory> {
    let u0 = op_sigma.domain().field(u0)?;
    let settings = SolverSettings::new(tau, t_final).map_err(to_py)?;
    py.detach(|| dynamics::ac_evolve(&op_sigma.op, &potential.0, &u0, &settings))
        .map(PyTrajectory)
        .map_err(to_py)
}

#[pyfunction]
fn pm_evolve(py: Python<'_>, op_s: &PyOperator, potential: PyPotential, u0: Vec<f64>, tau: f64, t_final: f64) -> PyResult<PyTrajectory> {
    let u0 = op_s.domain().field(u0)?;
    let settings = SolverSettings::new(tau, t_final).map_err(to_py)?;
    py.detach(|| dynamics::pm_evolve(&op_s.op, &potential.0, &u0, &settings))
        .map(PyTrajectory)
        .map_err(to_py)
}

#[pyfunction]
fn kernel_constant(r: f64) -> PyResult<f64> {
    fracop::kernel_constant(r, 1).map(|k| k.value).map_err(to_py)
}

/// Lowest-energy stationary state as a dict with keys `u`, `energy`,
/// `residual`, `lambda1` and `classification`.
#[pyfunction]
#[pyo3(signature = (op_sigma, potential, seed = 0))]
fn stationary_state(py: Python<'_>, op_sigma: &PyOperator, potential: PyPotential, seed: u64) -> PyResult<Py<PyAny>> {
    let res = py
        .detach(|| {
            let starts = stationary::default_starts(&op_sigma.op, seed)?;
            stationary::minimize_energy(&op_sigma.op, &potential.0, &starts)
        })
        .map_err(to_py)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("u", res.u_star.values().as_slice().to_vec())?;
    d.set_item("energy", res.energy)?;
    d.set_item("residual", res.residual)?;
    d.set_item("lambda1", res.lambda1_sigma)?;
    d.set_item("classification", res.classification.as_str())?;
    Ok(d.into_any().unbind())
}

/// Runs a config file like the CLI; returns the written file paths.
#[pyfunction]
#[pyo3(signature = (config, output = None, seed = 0))]
fn run_config(py: Python<'_>, config: PathBuf, output: Option<PathBuf>, seed: u64) -> PyResult<Vec<String>> {
    let summary = py
        .detach(|| experiments::run_file(&config, &RunOptions { seed, output }))
        .map_err(|e| match e {
            RunError::Config(_) => PyValueError::new_err(e.to_string()),
            _ => PyRuntimeError::new_err(e.to_string()),
        })?;
    Ok(summary.files.iter().map(|f| summary.output_dir.join(f).display().to_string()).collect())
}

#[pymodule]
fn pyfracfield(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(ch_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(ac_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(pm_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_constant, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_state, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
