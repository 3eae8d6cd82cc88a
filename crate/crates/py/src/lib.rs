//! Python bindings: potentials cross the boundary as `(cos, sin)` coefficient lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sturm_core::cli::{exit_code, EXIT_MALFORMED};
use sturm_core::eigensolve::SpectralSolver;
use sturm_core::equivalence::{self, SignSequence, Theorem};
use sturm_core::fundamental::{BoundaryCondition, IntegratorConfig};
use sturm_core::inverse::{reconstruct_from_gap_map, SolverConfig};
use sturm_core::maps::{self, Entries, MapKind, SpectralVector};
use sturm_core::oracle::{self, OracleConfig, OracleTag};
use sturm_core::potential::Potential;
use sturm_core::Error;

fn to_py(e: Error) -> PyErr {
    if exit_code(&e) == EXIT_MALFORMED {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn potential(cos: Vec<f64>, sin: Vec<f64>) -> PyResult<Potential> {
    Potential::from_fourier(&cos, &sin).map_err(to_py)
}

fn coefficients(q: &Potential) -> (Vec<f64>, Vec<f64>) {
    (q.cos_coeffs().to_vec(), q.sin_coeffs().to_vec())
}

/// Spectral table of the first `levels` levels as a dict of lists.
#[pyfunction]
#[pyo3(signature = (cos, sin, levels = 12))]
fn spectrum<'py>(py: Python<'py>, cos: Vec<f64>, sin: Vec<f64>, levels: usize) -> PyResult<Bound<'py, PyDict>> {
    let q = potential(cos, sin)?;
    let t = py
        .detach(|| SpectralSolver::new(&q, &IntegratorConfig::default())?.table(levels))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("nu0", t.nu0)?;
    d.set_item("lam0_plus", t.lam0_plus)?;
    d.set_item("mu", t.mu)?;
    d.set_item("nu", t.nu)?;
    d.set_item("tau", t.tau)?;
    d.set_item("rho", t.rho)?;
    d.set_item("lam_minus", t.lam_minus)?;
    d.set_item("lam_plus", t.lam_plus)?;
    d.set_item("lam_star", t.lam_star)?;
    d.set_item("h_s", t.hs)?;
    d.set_item("gh_s", t.ghs)?;
    Ok(d)
}

/// `Δ(λ)` at each point of `lambdas`.
#[pyfunction]
fn discriminant(py: Python<'_>, cos: Vec<f64>, sin: Vec<f64>, lambdas: Vec<f64>) -> PyResult<Vec<f64>> {
    let q = potential(cos, sin)?;
    py.detach(|| {
        let s = SpectralSolver::new(&q, &IntegratorConfig::default())?;
        lambdas.iter().map(|l| s.discriminant(*l)).collect::<sturm_core::Result<Vec<f64>>>()
    })
    .map_err(to_py)
}

/// Eigenvalues of one boundary problem: `bc` is DD, NN, DN or ND.
#[pyfunction]
fn eigenvalues(py: Python<'_>, cos: Vec<f64>, sin: Vec<f64>, bc: &str, count: usize) -> PyResult<Vec<f64>> {
    let q = potential(cos, sin)?;
    let bc: BoundaryCondition = bc.parse().map_err(to_py)?;
    py.detach(|| SpectralSolver::new(&q, &IntegratorConfig::default())?.boundary_eigenvalues(bc, count))
        .map_err(to_py)
}

/// The `2 * levels` gap-map entries.
#[pyfunction]
#[pyo3(signature = (cos, sin, levels = 12))]
fn gap_map(py: Python<'_>, cos: Vec<f64>, sin: Vec<f64>, levels: usize) -> PyResult<Vec<f64>> {
    let q = potential(cos, sin)?;
    let t = py
        .detach(|| SpectralSolver::new(&q, &IntegratorConfig::default())?.table(levels))
        .map_err(to_py)?;
    Ok(maps::gap_map(&t).entries.flat())
}

/// Newton inversion of a gap-map vector; returns `(cos, sin, report)`.
#[pyfunction]
#[pyo3(signature = (gap_f, residual_tol = 1e-8, max_iter = 60))]
fn reconstruct<'py>(
    py: Python<'py>,
    gap_f: Vec<f64>,
    residual_tol: f64,
    max_iter: usize,
) -> PyResult<(Vec<f64>, Vec<f64>, Bound<'py, PyDict>)> {
    if gap_f.is_empty() || !gap_f.len().is_multiple_of(2) {
        return Err(PyValueError::new_err("gap_f needs an even, non-zero number of entries"));
    }
    let levels = gap_f.len() / 2;
    let target = SpectralVector { kind: MapKind::GapF, levels, entries: Entries::Scalars(gap_f) };
    let mut cfg = SolverConfig::new(levels);
    cfg.residual_tol = residual_tol;
    cfg.max_iter = max_iter;
    let r = py.detach(|| reconstruct_from_gap_map(&target, &cfg)).map_err(to_py)?;
    let report = PyDict::new(py);
    report.set_item("residual_norm", r.residual_norm)?;
    report.set_item("iterations", r.iterations)?;
    report.set_item("converged", r.converged)?;
    report.set_item("jacobian_condition_estimate", r.jacobian_condition_estimate)?;
    let (c, s) = coefficients(&r.potential);
    Ok((c, s, report))
}

/// `U_σ q` for `sigma` in `all-ones`, `odd-ones` or comma-separated bits.
#[pyfunction]
#[pyo3(signature = (cos, sin, sigma, levels = 12))]
fn involve(py: Python<'_>, cos: Vec<f64>, sin: Vec<f64>, sigma: &str, levels: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let q = potential(cos, sin)?;
    let sigma: SignSequence = sigma.parse().map_err(to_py)?;
    let u = py
        .detach(|| equivalence::involution(&sigma, &q, &SolverConfig::new(levels)))
        .map_err(to_py)?;
    Ok(coefficients(&u))
}

/// Identity report for `t1`, `t2`, `t3` or `doubling`, as a JSON string.
#[pyfunction]
#[pyo3(signature = (which, cos, sin, levels = 12, sigma = None))]
fn verify(py: Python<'_>, which: &str, cos: Vec<f64>, sin: Vec<f64>, levels: usize, sigma: Option<&str>) -> PyResult<String> {
    let q = potential(cos, sin)?;
    let sigma = sigma.map(str::parse::<SignSequence>).transpose().map_err(to_py)?;
    let cfg = SolverConfig::new(levels);
    let report = py
        .detach(|| match which {
            "t1" => equivalence::verify_theorem(&q, Theorem::T1, None, &cfg),
            "t2" => equivalence::verify_theorem(&q, Theorem::T2, None, &cfg),
            "t3" => match &sigma {
                Some(s) => equivalence::verify_theorem(&q, Theorem::T3, Some(s), &cfg),
                None => Err(Error::Usage("t3 needs sigma".into())),
            },
            "doubling" => equivalence::verify_doubling(&q, levels),
            other => Err(Error::Usage(format!("unknown suite `{other}`"))),
        })
        .map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Finite-difference eigenvalues and error estimates; `tag` is DD, NN, DN, ND, PER2 or PER4.
#[pyfunction]
fn fd_spectrum(py: Python<'_>, cos: Vec<f64>, sin: Vec<f64>, tag: &str, levels: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let q = potential(cos, sin)?;
    let tag: OracleTag = tag.parse().map_err(to_py)?;
    let o = py
        .detach(|| oracle::fd_spectrum(&q, &OracleConfig::new(tag, levels)))
        .map_err(to_py)?;
    Ok((o.values, o.errors))
}

#[pymodule]
fn sturm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(discriminant, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(gap_map, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(involve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(fd_spectrum, m)?)?;
    Ok(())
}
