//! Python bindings.
//!
//! `Metric` wraps a catalog entry; `CurvaturePack` exposes the point
//! curvature data. Reports come back as plain dictionaries.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use curvkit_core::curvature::curvature_pack;
use curvkit_core::frames::{chern_basis_search, chern_expansion_check, ChernSearchOptions, FrameCurvature};
use curvkit_core::identities;
use curvkit_core::quadrature::{euler_characteristic, QuadratureOptions};
use curvkit_core::tensor::{Mat, Rank4};
use curvkit_core::variation::{compare_with_fd, FdOptions, Quantity};
use curvkit_core::{catalog_metric, CatalogEntry, DeformationField, Params};

create_exception!(curvkit, CurvkitError, PyException);

fn err(e: curvkit_core::Error) -> PyErr {
    CurvkitError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| CurvkitError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn mat(m: &Mat, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| m[i][..n].to_vec()).collect()
}

fn rank4(r: &Rank4, n: usize) -> Vec<Vec<Vec<Vec<f64>>>> {
    (0..n).map(|a| (0..n).map(|b| (0..n).map(|c| r[a][b][c][..n].to_vec()).collect()).collect()).collect()
}

/// Curvature of a metric at one point, in coordinates.
#[pyclass(frozen, module = "curvkit")]
struct CurvaturePack {
    inner: curvkit_core::CurvaturePack,
}

#[pymethods]
impl CurvaturePack {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn signature(&self) -> Vec<i8> {
        self.inner.signature.clone()
    }

    #[getter]
    fn g(&self) -> Vec<Vec<f64>> {
        mat(&self.inner.g, self.inner.dim)
    }

    #[getter]
    fn g_inv(&self) -> Vec<Vec<f64>> {
        mat(&self.inner.g_inv, self.inner.dim)
    }

    /// `R_ijkl`
    #[getter]
    fn riemann(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        rank4(&self.inner.riemann, self.inner.dim)
    }

    #[getter]
    fn ricci(&self) -> Vec<Vec<f64>> {
        mat(&self.inner.ricci, self.inner.dim)
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[getter]
    fn norm_r2(&self) -> f64 {
        self.inner.norm_r2
    }

    #[getter]
    fn norm_rho2(&self) -> f64 {
        self.inner.norm_rho2
    }

    #[getter]
    fn r_check(&self) -> Vec<Vec<f64>> {
        mat(&self.inner.r_check, self.inner.dim)
    }

    #[getter]
    fn rho_check(&self) -> Vec<Vec<f64>> {
        mat(&self.inner.rho_check, self.inner.dim)
    }

    #[getter]
    fn l_rho(&self) -> Vec<Vec<f64>> {
        mat(&self.inner.l_rho, self.inner.dim)
    }

    /// `|R|² − 4|ρ|² + τ²`
    fn gauss_bonnet_integrand(&self) -> PyResult<f64> {
        identities::gauss_bonnet_integrand(&self.inner).map_err(err)
    }

    #[pyo3(signature = (tolerance = identities::IDENTITY_TOL))]
    fn identity_residual(&self, py: Python<'_>, tolerance: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &identities::identity_residual_with(&self.inner, tolerance).map_err(err)?)
    }

    #[pyo3(signature = (tolerance = identities::IDENTITY_TOL))]
    fn weakly_einstein_residual(&self, py: Python<'_>, tolerance: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &identities::weakly_einstein_residual_with(&self.inner, tolerance).map_err(err)?)
    }

    #[pyo3(signature = (tolerance = identities::IDENTITY_TOL))]
    fn einstein_residual(&self, py: Python<'_>, tolerance: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &identities::einstein_residual_with(&self.inner, tolerance).map_err(err)?)
    }

    /// Reconstruction of a 3-dimensional curvature tensor from its Ricci tensor.
    #[pyo3(signature = (tolerance = 1e-9))]
    fn three_dim_reconstruction(&self, py: Python<'_>, tolerance: f64) -> PyResult<Py<PyAny>> {
        to_py(py, &identities::three_dim_reconstruction_defect(&self.inner, tolerance).map_err(err)?)
    }

    /// Chern frame search in an orthonormal frame of a Riemannian 4-manifold,
    /// with the component expansions in the frame found.
    #[pyo3(signature = (restarts = 32, max_iterations = 500, seed = 0, tolerance = 1e-9))]
    fn chern_basis(&self, py: Python<'_>, restarts: usize, max_iterations: usize, seed: u64, tolerance: f64) -> PyResult<Py<PyAny>> {
        let fc = FrameCurvature::from_pack(&self.inner).map_err(err)?;
        let search = chern_basis_search(&fc.riemann, &ChernSearchOptions { restarts, max_iterations, seed });
        let expansions = chern_expansion_check(&search.rotated, tolerance).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("search", to_py(py, &search)?)?;
        out.set_item("expansions", to_py(py, &expansions)?)?;
        Ok(out.into_any().unbind())
    }

    fn __repr__(&self) -> String {
        format!("CurvaturePack(dim={}, tau={:.6}, norm_r2={:.6}, norm_rho2={:.6})", self.inner.dim, self.inner.tau, self.inner.norm_r2, self.inner.norm_rho2)
    }
}

/// A catalog metric with its parameters.
#[pyclass(frozen, module = "curvkit")]
struct Metric {
    entry: CatalogEntry,
}

#[pymethods]
impl Metric {
    /// `Metric("sphere4", r=1.0)`; numeric keywords become parameters and
    /// `inner` names the 3-dimensional factor of `product_3d_x_line`.
    #[new]
    #[pyo3(signature = (name, inner = None, **params))]
    fn new(name: &str, inner: Option<String>, params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = Params::new();
        if let Some(d) = params {
            for (k, v) in d.iter() {
                p = p.with(&k.extract::<String>()?, v.extract::<f64>()?);
            }
        }
        p.inner = inner;
        Ok(Metric { entry: catalog_metric(name, &p).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> String {
        self.entry.name.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.entry.metric.dim()
    }

    #[getter]
    fn signature(&self) -> Vec<i8> {
        self.entry.metric.signature.clone()
    }

    #[getter]
    fn closed(&self) -> bool {
        self.entry.metric.closed
    }

    /// `(lower, upper)` corners of the chart.
    #[getter]
    fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        (self.entry.metric.domain.lower.clone(), self.entry.metric.domain.upper.clone())
    }

    /// Closed-form invariants the entry is known to have.
    #[getter]
    fn reference(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.entry.reference)
    }

    fn value(&self, point: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(mat(&self.entry.metric.value(&point).map_err(err)?, self.dim()))
    }

    #[pyo3(signature = (count, seed = 0))]
    fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        self.entry.metric.sample_points(count, seed)
    }

    fn curvature(&self, point: Vec<f64>) -> PyResult<CurvaturePack> {
        Ok(CurvaturePack { inner: curvature_pack(&self.entry.metric, &point, true).map_err(err)? })
    }

    /// Gauss-Bonnet quadrature of a closed Riemannian 4-manifold.
    #[pyo3(signature = (initial_nodes = None, max_nodes = None, rel_tol = None))]
    fn euler_characteristic(&self, py: Python<'_>, initial_nodes: Option<usize>, max_nodes: Option<usize>, rel_tol: Option<f64>) -> PyResult<Py<PyAny>> {
        let d = QuadratureOptions::default();
        let opts = QuadratureOptions {
            initial_nodes: initial_nodes.unwrap_or(d.initial_nodes),
            max_nodes: max_nodes.unwrap_or(d.max_nodes),
            rel_tol: rel_tol.unwrap_or(d.rel_tol),
        };
        let metric = self.entry.metric.clone();
        let est = py.detach(move || euler_characteristic(&metric, &opts)).map_err(err)?;
        to_py(py, &est)
    }

    /// Closed-form first variation of `quantity` along a random periodic
    /// deformation, against finite differences.
    #[pyo3(signature = (quantity, point, seed = 0, amplitude = 0.3, dt = 1e-3, tolerance = 1e-6))]
    fn variation_check(&self, py: Python<'_>, quantity: &str, point: Vec<f64>, seed: u64, amplitude: f64, dt: f64, tolerance: f64) -> PyResult<Py<PyAny>> {
        let q = Quantity::ALL
            .into_iter()
            .find(|q| q.name() == quantity)
            .ok_or_else(|| CurvkitError::new_err(format!("unknown quantity `{quantity}`")))?;
        let m = &self.entry.metric;
        let h = DeformationField::metric_relative(m, &DeformationField::random_periodic(m.dim(), seed, amplitude));
        to_py(py, &compare_with_fd(q, m, &h, &point, &FdOptions { dt, tolerance }).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Metric({:?}, dim={})", self.entry.name, self.dim())
    }
}

#[pyfunction]
fn catalog_names() -> Vec<&'static str> {
    curvkit_core::catalog::CATALOG_NAMES.to_vec()
}

#[pyfunction]
fn quantity_names() -> Vec<&'static str> {
    Quantity::ALL.iter().map(|q| q.name()).collect()
}

/// Run the command-line front end and return its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(move || curvkit_core::cli::run(std::iter::once("curvkit".to_string()).chain(args)))
}

#[pymodule]
fn curvkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CurvkitError", m.py().get_type::<CurvkitError>())?;
    m.add_class::<Metric>()?;
    m.add_class::<CurvaturePack>()?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add_function(wrap_pyfunction!(quantity_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
