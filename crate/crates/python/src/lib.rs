//! Python module `nldp`: grids, exponents, problems, the solver and a few
//! of the regularity tools.

use std::sync::Arc;

use nldp_core::params::{check_boundedness_assumption, check_holder_assumption};
use nldp_core::regularity::{degiorgi_iteration, holder_constants, numeric_ineq_check, oscillation_sequence};
use nldp_core::solver::{minimize, solve_quadratic};
use nldp_core::{Coefficient, DiscreteFunction, EnergyContext, ExponentConfig, Grid, OmegaSpec, Point, SolveOptions};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: nldp_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn point(v: &[f64], n: usize) -> PyResult<Point> {
    if v.len() != n {
        return Err(PyValueError::new_err(format!("expected {n} coordinates, got {}", v.len())));
    }
    let mut x = [0.0; 2];
    x[..n].copy_from_slice(v);
    Ok(x)
}

#[pyclass(name = "ExponentConfig", frozen)]
pub struct PyExponents(ExponentConfig);

#[pymethods]
impl PyExponents {
    #[new]
    #[pyo3(signature = (n, s, t, p, q, p_star=None, q_star=None))]
    fn new(n: usize, s: f64, t: f64, p: f64, q: f64, p_star: Option<f64>, q_star: Option<f64>) -> PyResult<Self> {
        ExponentConfig::with_overrides(n, s, t, p, q, p_star, q_star).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }
    #[getter]
    fn s(&self) -> f64 {
        self.0.s
    }
    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }
    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }
    #[getter]
    fn q(&self) -> f64 {
        self.0.q
    }
    #[getter]
    fn p_star_s(&self) -> f64 {
        self.0.p_star_s
    }
    #[getter]
    fn q_star_t(&self) -> Option<f64> {
        self.0.q_star_t
    }
    #[getter]
    fn kappa(&self) -> Option<f64> {
        self.0.kappa
    }

    /// `q <= np/(n - sp)` or `sp >= n`.
    fn boundedness(&self) -> bool {
        check_boundedness_assumption(&self.0)
    }

    /// `tq <= sp + alpha`.
    fn holder_assumption(&self, alpha: f64) -> bool {
        check_holder_assumption(&self.0, alpha)
    }

    fn __repr__(&self) -> String {
        let c = &self.0;
        format!("ExponentConfig(n={}, s={}, t={}, p={}, q={})", c.n, c.s, c.t, c.p, c.q)
    }
}

#[pyclass(name = "Grid", frozen)]
pub struct PyGrid(Arc<Grid>);

#[pymethods]
impl PyGrid {
    /// Grid on `[-radius, radius]^n` with `Ω` the open box `(lo, hi)`.
    #[new]
    fn new(n: usize, radius: f64, spacing: f64, lo: Vec<f64>, hi: Vec<f64>) -> PyResult<Self> {
        let omega = OmegaSpec::Box { lo: point(&lo, n)?, hi: point(&hi, n)? };
        Grid::build(n, radius, spacing, &omega).map(|g| Self(Arc::new(g))).map_err(err)
    }

    /// Grid with `Ω` the open ball of radius `ball_radius` around `center`.
    #[staticmethod]
    fn ball(n: usize, radius: f64, spacing: f64, center: Vec<f64>, ball_radius: f64) -> PyResult<Self> {
        let omega = OmegaSpec::Ball { center: point(&center, n)?, radius: ball_radius };
        Grid::build(n, radius, spacing, &omega).map(|g| Self(Arc::new(g))).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }
    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }
    #[getter]
    fn radius(&self) -> f64 {
        self.0.radius()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn nodes(&self) -> Vec<Vec<f64>> {
        let n = self.0.dim();
        self.0.nodes().iter().map(|x| x[..n].to_vec()).collect()
    }

    fn interior_mask(&self) -> Vec<bool> {
        self.0.interior_mask().to_vec()
    }
}

/// Grid, exponents and coefficient of one problem with model kernels.
#[pyclass(name = "Problem", frozen)]
pub struct PyProblem(EnergyContext);

impl PyProblem {
    fn function(&self, values: Vec<f64>, far_field: Option<f64>) -> PyResult<DiscreteFunction> {
        DiscreteFunction::new(self.0.grid(), values, far_field).map_err(err)
    }
}

#[pymethods]
impl PyProblem {
    /// `coefficient` is one of `zero`, `constant` (uses `value`),
    /// `cos_product` or `clipped_power` (uses `value` as the exponent).
    #[new]
    #[pyo3(signature = (grid, exponents, coefficient="zero", value=None))]
    fn new(grid: &PyGrid, exponents: &PyExponents, coefficient: &str, value: Option<f64>) -> PyResult<Self> {
        let need = |v: Option<f64>| v.ok_or_else(|| PyValueError::new_err(format!("{coefficient} needs a value")));
        let a = match coefficient {
            "zero" => Coefficient::zero(),
            "constant" => Coefficient::constant(need(value)?).map_err(err)?,
            "cos_product" => Coefficient::cos_product(),
            "clipped_power" => Coefficient::clipped_power(need(value)?).map_err(err)?,
            other => return Err(PyValueError::new_err(format!("unknown coefficient {other}"))),
        };
        EnergyContext::model(grid.0.clone(), exponents.0, a).map(Self).map_err(err)
    }

    #[pyo3(signature = (values, far_field=None))]
    fn energy(&self, values: Vec<f64>, far_field: Option<f64>) -> PyResult<f64> {
        nldp_core::energy::energy(&self.0, &self.function(values, far_field)?).map_err(err)
    }

    /// Gradient with respect to the interior values, in interior order.
    #[pyo3(signature = (values, far_field=None))]
    fn gradient(&self, values: Vec<f64>, far_field: Option<f64>) -> PyResult<Vec<f64>> {
        nldp_core::energy::energy_gradient(&self.0, &self.function(values, far_field)?).map_err(err)
    }

    /// Minimizes with exterior values taken from `datum`; returns the nodal
    /// values and a report dict.
    #[pyo3(signature = (datum, far_field=Some(0.0), grad_tol=None, max_iters=100_000))]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        datum: Vec<f64>,
        far_field: Option<f64>,
        grad_tol: Option<f64>,
        max_iters: usize,
    ) -> PyResult<(Vec<f64>, Bound<'py, PyDict>)> {
        let g = self.function(datum, far_field)?;
        let opts = SolveOptions { grad_tol, max_iters, ..Default::default() };
        let (u, rep) = py.detach(|| minimize(&self.0, &g, &opts)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("energy", rep.energy)?;
        d.set_item("iters", rep.iters)?;
        d.set_item("grad_norm", rep.grad_norm)?;
        d.set_item("grad_tol", rep.grad_tol)?;
        d.set_item("converged", rep.converged)?;
        Ok((u.values().to_vec(), d))
    }

    /// Direct solve of the linear case `p = q = 2`.
    #[pyo3(signature = (datum, far_field=Some(0.0)))]
    fn solve_quadratic(&self, datum: Vec<f64>, far_field: Option<f64>) -> PyResult<Vec<f64>> {
        let g = self.function(datum, far_field)?;
        solve_quadratic(&self.0, &g).map(|u| u.values().to_vec()).map_err(err)
    }

    /// Oscillations over `B_{σ^j r}(center)` and the fitted exponent.
    #[pyo3(signature = (values, center, radius, sigma=0.25, jmax=10))]
    fn oscillation<'py>(
        &self,
        py: Python<'py>,
        values: Vec<f64>,
        center: Vec<f64>,
        radius: f64,
        sigma: f64,
        jmax: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = self.0.grid();
        let u = self.function(values, None)?;
        let x0 = point(&center, grid.dim())?;
        let tr = oscillation_sequence(grid, &u, &x0, radius, sigma, jmax).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("gamma_fit", tr.gamma_fit)?;
        d.set_item("fit_residual", tr.fit_residual)?;
        d.set_item("radii", tr.radii)?;
        d.set_item("omega", tr.omega)?;
        Ok(d)
    }
}

/// Iterates `y_{i+1} = b1 b2^i y_i^{1+beta}`.
#[pyfunction]
#[pyo3(name = "degiorgi_iteration")]
fn py_degiorgi<'py>(
    py: Python<'py>,
    y0: f64,
    b1: f64,
    b2: f64,
    beta: f64,
    imax: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let out = degiorgi_iteration(y0, b1, b2, beta, imax).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("converged", out.converged)?;
    d.set_item("threshold", out.threshold)?;
    d.set_item("trace", out.trace)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(name = "size_comparison_constant")]
fn py_size_comparison_constant(p: f64) -> f64 {
    nldp_core::regularity::size_comparison_constant(p)
}

#[pyfunction]
#[pyo3(name = "numeric_ineq_check")]
fn py_numeric_ineq_check(a: f64, b: f64, p: f64, eps: f64) -> (bool, bool) {
    numeric_ineq_check(a, b, p, eps)
}

/// Natural logarithms of `σ`, `γ` and `ε` together with `M`, `M̃`.
#[pyfunction]
#[pyo3(name = "holder_constants", signature = (exponents, alpha, sup_u, d, c_star=1.0, c0=1.0))]
fn py_holder_constants<'py>(
    py: Python<'py>,
    exponents: &PyExponents,
    alpha: f64,
    sup_u: f64,
    d: f64,
    c_star: f64,
    c0: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let hc = holder_constants(&exponents.0, alpha, sup_u, d, c_star, c0).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("m", hc.m)?;
    out.set_item("m_tilde", hc.m_tilde)?;
    out.set_item("kappa", hc.kappa)?;
    out.set_item("ln_nu_star", hc.ln_nu_star)?;
    out.set_item("ln_sigma", hc.ln_sigma)?;
    out.set_item("ln_gamma", hc.ln_gamma)?;
    out.set_item("ln_epsilon", hc.ln_epsilon)?;
    Ok(out)
}

#[pymodule]
fn nldp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExponents>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(py_degiorgi, m)?)?;
    m.add_function(wrap_pyfunction!(py_size_comparison_constant, m)?)?;
    m.add_function(wrap_pyfunction!(py_numeric_ineq_check, m)?)?;
    m.add_function(wrap_pyfunction!(py_holder_constants, m)?)?;
    Ok(())
}
