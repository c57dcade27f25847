use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rio_core::grid::{maximal_average, oscillation, rearrange};
use rio_core::operators::{apply_qbar, apply_tbar, OperatorSpec};
use rio_core::regimes::{self, EmbeddingCertificate};
use rio_core::{Grid, GridFunction, RioError, Space, Weight};

create_exception!(rio, RefusedError, PyException);
create_exception!(rio, UnsupportedError, PyException);

fn err(e: RioError) -> PyErr {
    match e {
        RioError::Refused(m) => RefusedError::new_err(m),
        RioError::UnsupportedAssociate(m) => UnsupportedError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Grid", module = "rio", frozen)]
struct PyGrid(Arc<Grid>);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (n = 4096, tmin_log2 = 40.0))]
    fn new(n: usize, tmin_log2: f64) -> PyResult<Self> {
        Ok(PyGrid(Arc::new(Grid::new(n, 2f64.powf(-tmin_log2)).map_err(err)?)))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn t_min(&self) -> f64 {
        self.0.t_min()
    }

    fn nodes(&self) -> Vec<f64> {
        self.0.nodes().to_vec()
    }

    fn refined(&self) -> PyResult<Self> {
        Ok(PyGrid(Arc::new(self.0.refined().map_err(err)?)))
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, t_min={:e})", self.0.n(), self.0.t_min())
    }
}

#[pyclass(name = "GridFunction", module = "rio", frozen)]
struct PyGridFunction(GridFunction);

#[pymethods]
impl PyGridFunction {
    #[staticmethod]
    fn from_cells(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        GridFunction::from_cells(grid.0.clone(), values).map(PyGridFunction).map_err(err)
    }

    /// Sum of `height·χ_(a,b)` over `(a, b, height)` triples.
    #[staticmethod]
    fn from_steps(grid: &PyGrid, steps: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        GridFunction::from_steps(grid.0.clone(), &steps).map(PyGridFunction).map_err(err)
    }

    #[staticmethod]
    fn indicator(grid: &PyGrid, a: f64, b: f64) -> PyResult<Self> {
        GridFunction::indicator(grid.0.clone(), a, b).map(PyGridFunction).map_err(err)
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn sup(&self) -> f64 {
        self.0.sup()
    }

    fn distribution(&self, level: f64) -> f64 {
        self.0.distribution(level)
    }

    fn rearrange(&self) -> Self {
        PyGridFunction(rearrange(&self.0))
    }

    /// `f**` of the decreasing rearrangement.
    fn maximal_average(&self) -> PyResult<Self> {
        maximal_average(&rearrange(&self.0)).map(PyGridFunction).map_err(err)
    }

    fn oscillation(&self, r: f64) -> PyResult<Self> {
        oscillation(&self.0, r).map(PyGridFunction).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("GridFunction(n={}, mass={:e})", self.0.grid().n(), self.0.mass())
    }
}

#[pyclass(name = "Space", module = "rio", frozen)]
struct PySpace(Space);

#[pymethods]
impl PySpace {
    /// Descriptor such as `Lp:2`, `Lorentz:3,2`, `Zygmund:2,1`, `ExpL:1`, `Lp:2^(1.5)`.
    #[new]
    fn new(descriptor: &str) -> PyResult<Self> {
        descriptor.parse().map(PySpace).map_err(err)
    }

    fn norm(&self, f: &PyGridFunction) -> f64 {
        self.0.norm(&f.0)
    }

    fn fundamental(&self, t: f64) -> f64 {
        self.0.fundamental(t)
    }

    fn associate(&self) -> PyResult<Self> {
        self.0.associate().map(PySpace).map_err(err)
    }

    fn convexified(&self, s: f64) -> PyResult<Self> {
        self.0.convexified(s).map(PySpace).map_err(err)
    }

    fn boyd_indices(&self) -> (f64, f64) {
        let ix = self.0.boyd_indices();
        (ix.lower, ix.upper)
    }

    #[getter]
    fn is_banach(&self) -> bool {
        self.0.is_banach()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Space('{}')", self.0)
    }
}

#[pyclass(name = "Weight", module = "rio", frozen)]
struct PyWeight(Weight);

#[pymethods]
impl PyWeight {
    /// `ψ(t) = t^gamma (ln e/t)^delta`.
    #[new]
    #[pyo3(signature = (gamma, delta = 0.0))]
    fn new(gamma: f64, delta: f64) -> PyResult<Self> {
        Weight::new(gamma, delta).map(PyWeight).map_err(err)
    }

    fn psi(&self, t: f64) -> f64 {
        self.0.psi(t)
    }

    fn m_psi(&self, t: f64) -> PyResult<f64> {
        self.0.m_psi(t).map_err(err)
    }

    fn mpsi_integral(&self) -> PyResult<f64> {
        self.0.mpsi_integral().map_err(err)
    }

    fn fundamental_indices(&self) -> (f64, f64) {
        let ix = self.0.fundamental_indices();
        (ix.lower, ix.upper)
    }

    #[getter]
    fn in_a0(&self) -> bool {
        self.0.in_a0()
    }

    fn __repr__(&self) -> String {
        format!("Weight({})", self.0)
    }
}

fn corpus_of(fs: Vec<PyRef<'_, PyGridFunction>>) -> Vec<GridFunction> {
    fs.iter().map(|f| f.0.clone()).collect()
}

fn certificate<'py>(py: Python<'py>, c: EmbeddingCertificate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("inequality", c.inequality_id)?;
    d.set_item("constant_forward", c.constant_forward)?;
    d.set_item("constant_backward", c.constant_backward)?;
    d.set_item("reference_bound", c.reference_bound)?;
    d.set_item("worst_function", c.worst_function)?;
    d.set_item("corpus_size", c.corpus_size)?;
    d.set_item("excluded", c.excluded)?;
    d.set_item("rows", c.rows.iter().map(|r| (r.lhs, r.rhs)).collect::<Vec<_>>())?;
    Ok(d)
}

#[pyfunction]
fn classify<'py>(py: Python<'py>, x: &PySpace, w: &PyWeight, r: f64, grid: &PyGrid) -> PyResult<Bound<'py, PyDict>> {
    let rep = regimes::classify(&x.0, &w.0, r, &grid.0).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("regime", rep.regime.to_string())?;
    d.set_item("boyd", (rep.boyd.lower, rep.boyd.upper))?;
    d.set_item("psi_indices", (rep.psi_indices.lower, rep.psi_indices.upper))?;
    d.set_item("kernel_finite", rep.kernel_finite.to_string())?;
    d.set_item("evidence", rep.evidence)?;
    Ok(d)
}

/// `‖O(|f|^r,·)^{1/r}/ψ‖_X`.
#[pyfunction]
fn osc_norm(x: &PySpace, w: &PyWeight, r: f64, f: &PyGridFunction) -> PyResult<f64> {
    regimes::osc_norm(&x.0, &w.0, r, &f.0).map_err(err)
}

#[pyfunction]
fn qbar(w: &PyWeight, r: f64, f: &PyGridFunction) -> PyResult<PyGridFunction> {
    let spec = OperatorSpec::qbar(w.0.clone(), r).map_err(err)?;
    apply_qbar(&spec, &f.0).map(PyGridFunction).map_err(err)
}

#[pyfunction]
fn tbar(w: &PyWeight, r: f64, h: &PyGridFunction) -> PyResult<PyGridFunction> {
    let spec = OperatorSpec::tbar(w.0.clone(), r).map_err(err)?;
    apply_tbar(&spec, &h.0).map(PyGridFunction).map_err(err)
}

#[pyfunction]
fn supercritical_linfty_audit<'py>(
    py: Python<'py>,
    x: &PySpace,
    w: &PyWeight,
    r: f64,
    corpus: Vec<PyRef<'py, PyGridFunction>>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = regimes::supercritical_linfty_audit(&x.0, &w.0, r, &corpus_of(corpus)).map_err(err)?;
    certificate(py, c)
}

#[pyfunction]
fn subcritical_equivalence_audit<'py>(
    py: Python<'py>,
    x: &PySpace,
    w: &PyWeight,
    r: f64,
    corpus: Vec<PyRef<'py, PyGridFunction>>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = regimes::subcritical_equivalence_audit(&x.0, &w.0, r, &corpus_of(corpus)).map_err(err)?;
    certificate(py, c)
}

#[pyfunction]
fn critical_estimate_audit<'py>(
    py: Python<'py>,
    x: &PySpace,
    w: &PyWeight,
    r: f64,
    alpha: f64,
    corpus: Vec<PyRef<'py, PyGridFunction>>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = regimes::critical_estimate_audit(&x.0, &w.0, r, alpha, &corpus_of(corpus)).map_err(err)?;
    certificate(py, c)
}

/// Both sides of the reduction of a quasi-Banach pair to a Banach one.
#[pyfunction]
fn quasi_banach_identity(x: &PySpace, w: &PyWeight, r: f64, f: &PyGridFunction) -> PyResult<(f64, f64)> {
    regimes::quasi_banach_identity(&x.0, &w.0, r, &f.0).map_err(err)
}

#[pymodule]
fn rio(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyGridFunction>()?;
    m.add_class::<PySpace>()?;
    m.add_class::<PyWeight>()?;
    m.add("RefusedError", m.py().get_type::<RefusedError>())?;
    m.add("UnsupportedError", m.py().get_type::<UnsupportedError>())?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(osc_norm, m)?)?;
    m.add_function(wrap_pyfunction!(qbar, m)?)?;
    m.add_function(wrap_pyfunction!(tbar, m)?)?;
    m.add_function(wrap_pyfunction!(supercritical_linfty_audit, m)?)?;
    m.add_function(wrap_pyfunction!(subcritical_equivalence_audit, m)?)?;
    m.add_function(wrap_pyfunction!(critical_estimate_audit, m)?)?;
    m.add_function(wrap_pyfunction!(quasi_banach_identity, m)?)?;
    Ok(())
}
