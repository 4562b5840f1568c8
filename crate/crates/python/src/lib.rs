//! Python bindings: system parameters, closed-form constants, the phase
//! design routines and Monte Carlo rate estimation.

use std::f64::consts::PI;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use irsphase::baseline;
use irsphase::channel::{Direction, RicianFactor};
use irsphase::harness::{preset, PRESET_NAMES};
use irsphase::optimizer::{self, PcdConfig, PcdMode, SpecialCase, Termination};
use irsphase::rate;
use irsphase::{CsiCase, DerivedConstants, Error, PhaseShiftMatrix};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_case(s: &str) -> PyResult<CsiCase> {
    CsiCase::ALL
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| PyValueError::new_err(format!("unknown CSI case {s:?}; use \"instant\" or \"statistic\"")))
}

const SPECIAL_CASES: [SpecialCase; 5] = [
    SpecialCase::SingleElement,
    SpecialCase::SymmetricPositiveEta,
    SpecialCase::SymmetricNonpositiveEta,
    SpecialCase::NoInterference,
    SpecialCase::General,
];

fn parse_special(s: &str) -> PyResult<SpecialCase> {
    SPECIAL_CASES
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| PyValueError::new_err(format!("unknown classification {s:?}")))
}

fn to_matrix(rows: Vec<Vec<f64>>) -> PyResult<PhaseShiftMatrix> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n_cols) {
        return Err(PyValueError::new_err("phase rows must all have the same length"));
    }
    PhaseShiftMatrix::new(n_rows, n_cols, rows.concat()).map_err(py_err)
}

fn k_to_py(k: RicianFactor) -> f64 {
    match k {
        RicianFactor::Finite(x) => x,
        RicianFactor::PureLos => f64::INFINITY,
    }
}

fn k_from_py(x: f64) -> RicianFactor {
    if x == f64::INFINITY {
        RicianFactor::PureLos
    } else {
        RicianFactor::Finite(x)
    }
}

/// System description in linear units (watts, power gains). Rician factors
/// are linear with `inf` for pure LoS; directions are `(h, v)` in radians.
#[pyclass(name = "SystemParams", module = "irsphase", frozen)]
struct PySystemParams {
    inner: irsphase::SystemParams,
}

#[pymethods]
impl PySystemParams {
    /// General-case reference system of the numerical study.
    #[staticmethod]
    fn reference() -> Self {
        Self {
            inner: irsphase::SystemParams::reference(),
        }
    }

    /// Base operating point of a named scenario preset.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let p = preset(name).ok_or_else(|| {
            PyValueError::new_err(format!("unknown preset {name:?}; known: {}", PRESET_NAMES.join(", ")))
        })?;
        Ok(Self {
            inner: p.scenario.to_params().map_err(py_err)?,
        })
    }

    /// Copy with the given fields replaced, validated.
    #[pyo3(signature = (**changes))]
    fn replace(&self, changes: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = self.inner.clone();
        if let Some(changes) = changes {
            for (key, value) in changes.iter() {
                let key: String = key.extract()?;
                let dir = |v: &Bound<'_, PyAny>| -> PyResult<Direction> {
                    let (h, v): (f64, f64) = v.extract()?;
                    Ok(Direction::new(h, v))
                };
                match key.as_str() {
                    "m_s" => p.m_s = value.extract()?,
                    "n_s" => p.n_s = value.extract()?,
                    "m_i" => p.m_i = value.extract()?,
                    "n_i" => p.n_i = value.extract()?,
                    "m_r" => p.m_r = value.extract()?,
                    "n_r" => p.n_r = value.extract()?,
                    "d_over_lambda" => p.d_over_lambda = value.extract()?,
                    "p_s" => p.p_s = value.extract()?,
                    "p_i" => p.p_i = value.extract()?,
                    "sigma2" => p.sigma2 = value.extract()?,
                    "alpha_su" => p.alpha_su = value.extract()?,
                    "alpha_iu" => p.alpha_iu = value.extract()?,
                    "alpha_sr" => p.alpha_sr = value.extract()?,
                    "alpha_ir" => p.alpha_ir = value.extract()?,
                    "alpha_ru" => p.alpha_ru = value.extract()?,
                    "k_sr" => p.k_sr = k_from_py(value.extract()?),
                    "k_ir" => p.k_ir = k_from_py(value.extract()?),
                    "k_ru" => p.k_ru = k_from_py(value.extract()?),
                    "delta_sr" => p.delta_sr = dir(&value)?,
                    "delta_ir" => p.delta_ir = dir(&value)?,
                    "phi_sr" => p.phi_sr = dir(&value)?,
                    "phi_ir" => p.phi_ir = dir(&value)?,
                    "phi_ru" => p.phi_ru = dir(&value)?,
                    other => return Err(PyValueError::new_err(format!("unknown field {other:?}"))),
                }
            }
        }
        p.validate().map_err(py_err)?;
        Ok(Self { inner: p })
    }

    #[getter]
    fn m_s(&self) -> usize {
        self.inner.m_s
    }

    #[getter]
    fn n_s(&self) -> usize {
        self.inner.n_s
    }

    #[getter]
    fn m_i(&self) -> usize {
        self.inner.m_i
    }

    #[getter]
    fn n_i(&self) -> usize {
        self.inner.n_i
    }

    #[getter]
    fn m_r(&self) -> usize {
        self.inner.m_r
    }

    #[getter]
    fn n_r(&self) -> usize {
        self.inner.n_r
    }

    #[getter]
    fn d_over_lambda(&self) -> f64 {
        self.inner.d_over_lambda
    }

    #[getter]
    fn p_s(&self) -> f64 {
        self.inner.p_s
    }

    #[getter]
    fn p_i(&self) -> f64 {
        self.inner.p_i
    }

    #[getter]
    fn sigma2(&self) -> f64 {
        self.inner.sigma2
    }

    #[getter]
    fn alpha_su(&self) -> f64 {
        self.inner.alpha_su
    }

    #[getter]
    fn alpha_iu(&self) -> f64 {
        self.inner.alpha_iu
    }

    #[getter]
    fn alpha_sr(&self) -> f64 {
        self.inner.alpha_sr
    }

    #[getter]
    fn alpha_ir(&self) -> f64 {
        self.inner.alpha_ir
    }

    #[getter]
    fn alpha_ru(&self) -> f64 {
        self.inner.alpha_ru
    }

    #[getter]
    fn k_sr(&self) -> f64 {
        k_to_py(self.inner.k_sr)
    }

    #[getter]
    fn k_ir(&self) -> f64 {
        k_to_py(self.inner.k_ir)
    }

    #[getter]
    fn k_ru(&self) -> f64 {
        k_to_py(self.inner.k_ru)
    }

    #[getter]
    fn delta_sr(&self) -> (f64, f64) {
        (self.inner.delta_sr.h, self.inner.delta_sr.v)
    }

    #[getter]
    fn delta_ir(&self) -> (f64, f64) {
        (self.inner.delta_ir.h, self.inner.delta_ir.v)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SystemParams(bs={}x{}/{}x{}, irs={}x{}, p_s={}, p_i={}, sigma2={:e})",
            p.m_s, p.n_s, p.m_i, p.n_i, p.m_r, p.n_r, p.p_s, p.p_i, p.sigma2
        )
    }
}

/// Closed-form constants of the rate bound for one CSI case.
#[pyclass(name = "Constants", module = "irsphase", frozen)]
struct PyConstants {
    inner: DerivedConstants,
}

#[pymethods]
impl PyConstants {
    #[getter]
    fn csi_case(&self) -> &'static str {
        self.inner.csi_case.as_str()
    }
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.m_r, self.inner.n_r)
    }
    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }
    #[getter]
    fn y_ir(&self) -> f64 {
        self.inner.y_ir
    }
    #[getter]
    fn tau_sru(&self) -> f64 {
        self.inner.tau_sru
    }
    #[getter]
    fn tau_iru(&self) -> f64 {
        self.inner.tau_iru
    }
    #[getter]
    fn a_sru_los(&self) -> f64 {
        self.inner.a_sru_los
    }
    #[getter]
    fn a_sru_nlos(&self) -> f64 {
        self.inner.a_sru_nlos
    }
    #[getter]
    fn a_su(&self) -> f64 {
        self.inner.a_su
    }
    #[getter]
    fn a_iru_los(&self) -> f64 {
        self.inner.a_iru_los
    }
    #[getter]
    fn a_iru_nlos(&self) -> f64 {
        self.inner.a_iru_nlos
    }
    #[getter]
    fn a_iu(&self) -> f64 {
        self.inner.a_iu
    }
    #[getter]
    fn theta_sru(&self) -> Vec<f64> {
        self.inner.theta_sru.clone()
    }
    #[getter]
    fn theta_iru(&self) -> Vec<f64> {
        self.inner.theta_iru.clone()
    }
}

#[pyfunction]
fn constants(params: &PySystemParams, csi_case: &str) -> PyResult<PyConstants> {
    Ok(PyConstants {
        inner: rate::derived_constants(&params.inner, parse_case(csi_case)?).map_err(py_err)?,
    })
}

/// Closed-form upper bound on the expected SINR at the given phases.
#[pyfunction]
fn gamma_ub(constants: &PyConstants, phases: Vec<Vec<f64>>) -> PyResult<f64> {
    let phi = to_matrix(phases)?;
    check_shape(&constants.inner, &phi)?;
    Ok(rate::sinr_upper_bound(&constants.inner, &phi))
}

/// `log2(1 + gamma_ub)`.
#[pyfunction]
fn rate_ub(constants: &PyConstants, phases: Vec<Vec<f64>>) -> PyResult<f64> {
    let phi = to_matrix(phases)?;
    check_shape(&constants.inner, &phi)?;
    Ok(rate::rate_upper_bound(&constants.inner, &phi))
}

fn check_shape(c: &DerivedConstants, phi: &PhaseShiftMatrix) -> PyResult<()> {
    if (phi.rows(), phi.cols()) != (c.m_r, c.n_r) {
        return Err(PyValueError::new_err(format!(
            "phases are {}x{}, the IRS is {}x{}",
            phi.rows(),
            phi.cols(),
            c.m_r,
            c.n_r
        )));
    }
    Ok(())
}

#[pyfunction]
#[pyo3(signature = (params, constants, angle_tol = optimizer::DEFAULT_ANGLE_TOL))]
fn classify(params: &PySystemParams, constants: &PyConstants, angle_tol: f64) -> &'static str {
    optimizer::classify(&params.inner, &constants.inner, angle_tol).as_str()
}

#[pyfunction]
#[pyo3(signature = (classification, constants, alpha = 0.0))]
fn solve_special(classification: &str, constants: &PyConstants, alpha: f64) -> PyResult<Vec<Vec<f64>>> {
    let phi = optimizer::solve_special(parse_special(classification)?, &constants.inner, alpha).map_err(py_err)?;
    Ok(phi.to_rows())
}

#[pyfunction]
fn signal_only_phases(constants: &PyConstants) -> Vec<Vec<f64>> {
    baseline::signal_only_phases(&constants.inner).to_rows()
}

/// Coordinate descent on the rate bound. `mode` is "parallel" or
/// "sequential"; `init` defaults to the signal-aligned phases.
#[pyfunction]
#[pyo3(signature = (constants, init = None, mode = "parallel", rho0 = 1.0, kappa = 0.75, tol = 1e-6, max_iter = 10_000))]
#[allow(clippy::too_many_arguments)]
fn pcd<'py>(
    py: Python<'py>,
    constants: &PyConstants,
    init: Option<Vec<Vec<f64>>>,
    mode: &str,
    rho0: f64,
    kappa: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = match mode {
        "parallel" => PcdMode::Parallel,
        "sequential" => PcdMode::Sequential,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let init = match init {
        Some(rows) => to_matrix(rows)?,
        None => baseline::signal_only_phases(&constants.inner),
    };
    check_shape(&constants.inner, &init)?;
    let config = PcdConfig {
        rho0,
        kappa,
        tol,
        max_iter,
        mode,
    };
    let c = &constants.inner;
    let trace = py
        .detach(|| optimizer::pcd(c, &init, &config))
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("phases", trace.phases.to_rows())?;
    out.set_item("iterations", trace.iterations)?;
    out.set_item("objective", trace.objective.clone())?;
    out.set_item(
        "terminated_by",
        match trace.terminated_by {
            Termination::Tolerance => "tolerance",
            Termination::MaxIter => "max_iter",
        },
    )?;
    Ok(out)
}

/// Sample mean and standard error of the rate over `n_samples` seeded
/// channel draws.
#[pyfunction]
fn monte_carlo_rate(
    py: Python<'_>,
    params: &PySystemParams,
    phases: Vec<Vec<f64>>,
    csi_case: &str,
    n_samples: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let phi = to_matrix(phases)?;
    let case = parse_case(csi_case)?;
    let p = &params.inner;
    let est = py
        .detach(|| rate::monte_carlo_rate(p, &phi, case, n_samples, seed))
        .map_err(py_err)?;
    Ok((est.mean, est.standard_error))
}

#[pyfunction]
fn quantize(phases: Vec<Vec<f64>>, bits: u32) -> PyResult<Vec<Vec<f64>>> {
    Ok(optimizer::quantize(&to_matrix(phases)?, bits).map_err(py_err)?.to_rows())
}

#[pyfunction]
fn degradation_bound(constants: &PyConstants, bits: u32, classification: &str) -> PyResult<f64> {
    Ok(optimizer::degradation_bound(&constants.inner, bits, parse_special(classification)?))
}

/// Discriminants deciding whether the optimally configured IRS beats the
/// system without IRS.
#[pyfunction]
fn compare<'py>(py: Python<'py>, constants: &PyConstants) -> PyResult<Bound<'py, PyDict>> {
    let v = baseline::compare(&constants.inner);
    let out = PyDict::new(py);
    out.set_item("xi_gt", v.xi_gt)?;
    out.set_item("xi_lt", v.xi_lt)?;
    out.set_item("varsigma", v.varsigma)?;
    out.set_item("noise_term", v.noise_term)?;
    out.set_item("verdict", v.verdict.as_str())?;
    Ok(out)
}

#[pyfunction]
fn no_irs_sinr_ub(params: &PySystemParams, csi_case: &str) -> PyResult<f64> {
    baseline::no_irs_sinr_ub(&params.inner, parse_case(csi_case)?).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "irsphase")]
fn irsphase_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyConstants>()?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_ub, m)?)?;
    m.add_function(wrap_pyfunction!(rate_ub, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(solve_special, m)?)?;
    m.add_function(wrap_pyfunction!(signal_only_phases, m)?)?;
    m.add_function(wrap_pyfunction!(pcd, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_rate, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(degradation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(no_irs_sinr_ub, m)?)?;
    m.add("TWO_PI", 2.0 * PI)?;
    Ok(())
}
