//! Python bindings: grids, the Poisson-Boltzmann solves, reduced ion runs,
//! the epsilon sweep and the config-driven driver.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mbions_core::cli::{execute, Command, Invocation};
use mbions_core::diagnostics::DiagnosticsRecord;
use mbions_core::domain::{Domain, DomainSpec};
use mbions_core::fields::{PoissonBoltzmann, SpatialField};
use mbions_core::kinetics::{PhaseDistribution, Species};
use mbions_core::reduced_ions::{self, ReducedParams, RunControl, TimeStep};
use mbions_core::two_species::{limit_experiment, EtaRule, TwoSpeciesControl, TwoSpeciesParams};

fn err(e: mbions_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Domain", frozen)]
struct PyDomain {
    inner: Arc<Domain>,
}

#[pymethods]
impl PyDomain {
    /// Periodic interval `[0, length)` with `n_x` cells and velocities in `(-v_max, v_max)`.
    #[staticmethod]
    #[pyo3(signature = (length, n_x, v_max, n_v, lambda_d = 1.0))]
    fn periodic(length: f64, n_x: usize, v_max: f64, n_v: usize, lambda_d: f64) -> PyResult<Self> {
        let mut spec = DomainSpec::periodic_1d(length, n_x, v_max, n_v);
        spec.lambda_d = lambda_d;
        Ok(PyDomain {
            inner: Domain::new(spec).map_err(err)?,
        })
    }

    /// `(0, length)` with specular walls.
    #[staticmethod]
    #[pyo3(signature = (length, n_x, v_max, n_v, lambda_d = 1.0))]
    fn interval(length: f64, n_x: usize, v_max: f64, n_v: usize, lambda_d: f64) -> PyResult<Self> {
        let mut spec = DomainSpec::interval_1d(length, n_x, v_max, n_v);
        spec.lambda_d = lambda_d;
        Ok(PyDomain {
            inner: Domain::new(spec).map_err(err)?,
        })
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.space.centers(0)
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.inner.velocity.centers()
    }

    /// Midpoint-rule integral of a cell field.
    fn integrate(&self, values: Vec<f64>) -> PyResult<f64> {
        Ok(self.field(values)?.integral())
    }

    fn __repr__(&self) -> String {
        let s = &self.inner.spec;
        format!(
            "Domain({:?}, n_x={}, v_max={}, n_v={}, lambda_d={})",
            s.geometry, s.n_x, s.v_max, s.n_v, s.lambda_d
        )
    }
}

impl PyDomain {
    fn field(&self, values: Vec<f64>) -> PyResult<SpatialField> {
        SpatialField::new(self.inner.space.clone(), values).map_err(err)
    }
}

fn record_dict<'py>(py: Python<'py>, r: &DiagnosticsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in DiagnosticsRecord::COLUMNS.iter().zip(r.values()) {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// Inverse temperature and potential with `int e^{beta phi} = m0` and field
/// plus thermal energy `e1`. `m0` defaults to the integral of `n_i`.
#[pyfunction]
#[pyo3(signature = (domain, n_i, e1, m0 = None))]
fn find_beta<'py>(
    py: Python<'py>,
    domain: &PyDomain,
    n_i: Vec<f64>,
    e1: f64,
    m0: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let n = domain.field(n_i)?;
    let m0 = m0.unwrap_or_else(|| n.integral());
    let dom = &domain.inner;
    let sol = py
        .detach(|| PoissonBoltzmann::new(dom.lambda_d(), dom.velocity_dim()).find_beta(&n, m0, e1))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("beta", sol.beta)?;
    d.set_item("phi", sol.phi.values)?;
    d.set_item("energy", sol.energy)?;
    d.set_item("pde_residual", sol.pde_residual)?;
    d.set_item("energy_residual", sol.energy_residual)?;
    d.set_item("mass_residual", sol.mass_residual)?;
    Ok(d)
}

/// Potential solving `-lambda^2 phi'' + e^{beta phi} = n_i` at fixed `beta`.
#[pyfunction]
fn solve_phi(domain: &PyDomain, n_i: Vec<f64>, beta: f64) -> PyResult<Vec<f64>> {
    let n = domain.field(n_i)?;
    let dom = &domain.inner;
    PoissonBoltzmann::new(dom.lambda_d(), dom.velocity_dim())
        .solve_phi(&n, beta)
        .map(|s| s.phi.values)
        .map_err(err)
}

/// Reduced ions run from Maxwellian ions with the given density; returns the
/// diagnostics rows.
#[pyfunction]
#[pyo3(signature = (domain, density, e0, t_end, dt, temperature = 1.0, output_every = 1))]
#[allow(clippy::too_many_arguments)]
fn run_reduced<'py>(
    py: Python<'py>,
    domain: &PyDomain,
    density: Vec<f64>,
    e0: f64,
    t_end: f64,
    dt: f64,
    temperature: f64,
    output_every: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let n = domain.field(density)?;
    let dom = domain.inner.clone();
    let records = py
        .detach(|| {
            let f0 = PhaseDistribution::with_density(dom, Species::Ion, &n, &[0.0], temperature)?;
            let params = ReducedParams::new(e0);
            let state = reduced_ions::init(&params, f0)?;
            let control = RunControl {
                t_end,
                step: TimeStep::Fixed(dt),
                output_every,
                max_steps: usize::MAX,
            };
            reduced_ions::run(&params, state, &control, |_| Ok(())).map(|(_, r)| r)
        })
        .map_err(err)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

/// Two-species runs over `epsilons` with `eta = coefficient * eps^exponent`
/// (`eta_rule` as in the config: `sqrt`, `const:C`, `power:C:P`).
#[pyfunction]
#[pyo3(signature = (domain, ion_density, electron_density, epsilons, t_end, dt, eta_rule = "sqrt"))]
#[allow(clippy::too_many_arguments)]
fn mb_sweep<'py>(
    py: Python<'py>,
    domain: &PyDomain,
    ion_density: Vec<f64>,
    electron_density: Vec<f64>,
    epsilons: Vec<f64>,
    t_end: f64,
    dt: f64,
    eta_rule: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let rule: EtaRule = eta_rule.parse().map_err(PyValueError::new_err)?;
    let (ni, ne) = (domain.field(ion_density)?, domain.field(electron_density)?);
    let dom = domain.inner.clone();
    let rows = py
        .detach(|| {
            let ions =
                PhaseDistribution::with_density(dom.clone(), Species::Ion, &ni, &[0.0], 1.0)?;
            let electrons =
                PhaseDistribution::with_density(dom, Species::Electron, &ne, &[0.0], 1.0)?;
            let params = TwoSpeciesParams {
                resolve_per_substep: true,
                ..TwoSpeciesParams::default()
            };
            let control = TwoSpeciesControl {
                t_end,
                dt: Some(dt),
                cfl: 0.5,
                output_every: 1,
                max_steps: usize::MAX,
            };
            limit_experiment(&params, &ions, &electrons, &epsilons, rule, None, &control)
        })
        .map_err(err)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("epsilon", r.epsilon)?;
            d.set_item("eta", r.eta)?;
            d.set_item("deviation", r.deviation)?;
            d.set_item("final_entropy", r.final_entropy)?;
            d.set_item("max_entropy_change", r.entropy_monitor.max_change)?;
            d.set_item("error", r.error.clone())?;
            Ok(d)
        })
        .collect()
}

/// Runs a config file like the command line does; returns `summary.json`.
#[pyfunction]
#[pyo3(signature = (config, command = "run", out = None))]
fn run_config(
    py: Python<'_>,
    config: PathBuf,
    command: &str,
    out: Option<PathBuf>,
) -> PyResult<String> {
    let command = match command {
        "run" => Command::Run,
        "solve-pb" => Command::SolvePb,
        "limit-sweep" => Command::LimitSweep,
        "equilibrium" => Command::Equilibrium,
        other => return Err(PyValueError::new_err(format!("unknown command '{other}'"))),
    };
    let inv = Invocation {
        command,
        config,
        out,
        verbose: false,
        dry_run: false,
    };
    let outcome = py.detach(|| execute(&inv)).map_err(err)?;
    serde_json::to_string(&outcome.summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn mbions(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_function(wrap_pyfunction!(find_beta, m)?)?;
    m.add_function(wrap_pyfunction!(solve_phi, m)?)?;
    m.add_function(wrap_pyfunction!(run_reduced, m)?)?;
    m.add_function(wrap_pyfunction!(mb_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
