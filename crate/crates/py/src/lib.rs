//! Python bindings for `povm-reduce`.
//!
//! Structured results (reduction reports, verdicts) are returned as plain
//! Python dicts mirroring the CLI's JSON output.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use povm_reduce::divergence::{self as div, FGenerator};
use povm_reduce::generators;
use povm_reduce::instrument::{self, KrausInstrument, DEFAULT_EXHAUSTIVE_LIMIT};
use povm_reduce::order::{self, EquivalenceMethod};
use povm_reduce::povm::{self as pv, DensityMatrix, DiscretePovm};
use povm_reduce::reduction;
use povm_reduce::selftest::{self, SelftestConfig};
use povm_reduce::{fixtures, matops, CMatrix, Error, HermitianMatrix};

create_exception!(
    povm_reduce,
    PovmError,
    PyValueError,
    "Invalid input or failed computation."
);
create_exception!(
    povm_reduce,
    AmbiguityError,
    PovmError,
    "A verdict that depends on the choice of tolerance."
);

fn err(e: Error) -> PyErr {
    if e.is_ambiguity() {
        AmbiguityError::new_err(e.to_string())
    } else {
        PovmError::new_err(e.to_string())
    }
}

type Matrix = Vec<Vec<Complex64>>;

fn to_cmatrix(rows: Matrix) -> PyResult<CMatrix> {
    CMatrix::from_rows(rows).map_err(err)
}

fn to_hermitian(rows: Matrix) -> PyResult<HermitianMatrix> {
    HermitianMatrix::new(to_cmatrix(rows)?).map_err(err)
}

fn rows(m: &CMatrix) -> Matrix {
    m.rows()
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PovmError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(module = "povm_reduce", frozen)]
struct Tolerances {
    inner: povm_reduce::Tolerances,
}

#[pymethods]
impl Tolerances {
    #[new]
    #[pyo3(signature = (psd=1e-9, comp=1e-8, prop=1e-8, lsb=1e-7, lp=1e-7, iso=1e-7, zero=1e-10))]
    fn new(psd: f64, comp: f64, prop: f64, lsb: f64, lp: f64, iso: f64, zero: f64) -> PyResult<Self> {
        let inner = povm_reduce::Tolerances {
            psd,
            comp,
            prop,
            lsb,
            lp,
            iso,
            zero,
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        let t = &self.inner;
        format!(
            "Tolerances(psd={:e}, comp={:e}, prop={:e}, lsb={:e}, lp={:e}, iso={:e}, zero={:e})",
            t.psd, t.comp, t.prop, t.lsb, t.lp, t.iso, t.zero
        )
    }
}

fn tol(t: Option<PyRef<'_, Tolerances>>) -> povm_reduce::Tolerances {
    t.map(|t| t.inner).unwrap_or_default()
}

#[pyclass(module = "povm_reduce", frozen)]
struct Povm {
    inner: DiscretePovm,
}

fn wrap(inner: DiscretePovm) -> Povm {
    Povm { inner }
}

#[pymethods]
impl Povm {
    #[new]
    #[pyo3(signature = (dim, outcomes, tol=None))]
    fn new(dim: usize, outcomes: Vec<(String, Matrix)>, tol: Option<PyRef<'_, Tolerances>>) -> PyResult<Self> {
        let outcomes = outcomes
            .into_iter()
            .map(|(l, m)| Ok((l, to_cmatrix(m)?)))
            .collect::<PyResult<Vec<_>>>()?;
        DiscretePovm::new(dim, outcomes, &self::tol(tol)).map(wrap).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (text, tol=None))]
    fn from_json(text: &str, tol: Option<PyRef<'_, Tolerances>>) -> PyResult<Self> {
        DiscretePovm::from_json(text, &self::tol(tol)).map(wrap).map_err(err)
    }

    #[staticmethod]
    fn computational_basis(dim: usize) -> Self {
        wrap(DiscretePovm::computational_basis(dim))
    }

    #[staticmethod]
    fn trine() -> Self {
        wrap(DiscretePovm::trine())
    }

    #[staticmethod]
    fn trivial(dim: usize) -> Self {
        wrap(DiscretePovm::trivial(dim))
    }

    #[staticmethod]
    fn random(dim: usize, n_outcomes: usize, seed: u64) -> PyResult<Self> {
        generators::random_povm(dim, n_outcomes, seed).map(wrap).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels().into_iter().map(String::from).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn effect(&self, label: &str) -> PyResult<Matrix> {
        self.inner
            .effect(label)
            .map(|e| rows(e.matrix().as_matrix()))
            .ok_or_else(|| err(Error::UnknownLabel(label.into())))
    }

    fn completeness_defect(&self) -> f64 {
        self.inner.completeness_defect()
    }

    fn distribution(&self, state: &State) -> PyResult<Vec<f64>> {
        pv::outcome_distribution(&self.inner, &state.inner).map_err(err)
    }

    /// Coarse-grain through a label map that must cover every outcome.
    fn pushforward(&self, mapping: BTreeMap<String, String>) -> PyResult<Self> {
        self.inner.pushforward_map(&mapping).map(wrap).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!("Povm(dim={}, labels={:?})", self.inner.dim(), self.inner.labels())
    }
}

#[pyclass(module = "povm_reduce", frozen)]
struct State {
    inner: DensityMatrix,
}

#[pymethods]
impl State {
    #[new]
    #[pyo3(signature = (matrix, tol=None))]
    fn new(matrix: Matrix, tol: Option<PyRef<'_, Tolerances>>) -> PyResult<Self> {
        let t = self::tol(tol);
        let inner = DensityMatrix::new(to_hermitian(matrix)?, t.psd).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (text, tol=None))]
    fn from_json(text: &str, tol: Option<PyRef<'_, Tolerances>>) -> PyResult<Self> {
        let inner = DensityMatrix::from_json(text, &self::tol(tol)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn pure(vector: Vec<Complex64>) -> PyResult<Self> {
        if vector.iter().all(|z| z.norm() == 0.0) {
            return Err(err(Error::InvalidState("zero vector".into())));
        }
        Ok(Self {
            inner: DensityMatrix::pure(&vector),
        })
    }

    #[staticmethod]
    fn maximally_mixed(dim: usize) -> Self {
        Self {
            inner: DensityMatrix::maximally_mixed(dim),
        }
    }

    #[staticmethod]
    fn random(dim: usize, seed: u64) -> Self {
        Self {
            inner: generators::random_density(dim, seed),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matrix(&self) -> Matrix {
        rows(self.inner.matrix().as_matrix())
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_raw()).map_err(|e| PovmError::new_err(e.to_string()))
    }
}

#[pyclass(module = "povm_reduce", frozen)]
struct Instrument {
    inner: KrausInstrument,
}

#[pymethods]
impl Instrument {
    #[new]
    #[pyo3(signature = (dim, outcomes, tol=None))]
    fn new(dim: usize, outcomes: Vec<(String, Vec<Matrix>)>, tol: Option<PyRef<'_, Tolerances>>) -> PyResult<Self> {
        let outcomes = outcomes
            .into_iter()
            .map(|(l, ks)| Ok((l, ks.into_iter().map(to_cmatrix).collect::<PyResult<Vec<_>>>()?)))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = KrausInstrument::new(dim, outcomes, &self::tol(tol)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (text, tol=None))]
    fn from_json(text: &str, tol: Option<PyRef<'_, Tolerances>>) -> PyResult<Self> {
        let inner = KrausInstrument::from_json(text, &self::tol(tol)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn luders(povm: &Povm) -> PyResult<Self> {
        let inner = KrausInstrument::luders(&povm.inner).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn identity(dim: usize) -> Self {
        Self {
            inner: KrausInstrument::identity(dim),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (dim, n_outcomes, seed, kraus_per_outcome=1))]
    fn random(dim: usize, n_outcomes: usize, seed: u64, kraus_per_outcome: usize) -> PyResult<Self> {
        let inner = generators::random_instrument(dim, n_outcomes, kraus_per_outcome, seed).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels().into_iter().map(String::from).collect()
    }

    /// Statistics-only POVM `{I_x(1)}`.
    fn povm(&self) -> Povm {
        wrap(self.inner.povm())
    }

    /// Joint POVM `C(x,y) = I_x(B(y))` with labels `"(x,y)"`.
    fn compose(&self, b: &Povm) -> PyResult<Povm> {
        instrument::compose(&self.inner, &b.inner)
            .map(|j| wrap(j.povm))
            .map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }
}

#[pyfunction]
#[pyo3(signature = (povm, lsb=false, tol=None))]
fn reduce<'py>(
    py: Python<'py>,
    povm: &Povm,
    lsb: bool,
    tol: Option<PyRef<'_, Tolerances>>,
) -> PyResult<Bound<'py, PyAny>> {
    let t = self::tol(tol);
    let report = if lsb {
        reduction::reduce_via_lsb(&povm.inner, &pv::tomographic_ensemble(povm.inner.dim()), &t)
    } else {
        reduction::reduce(&povm.inner, &t)
    }
    .map_err(err)?;
    to_py(py, &report)
}

/// The reduced POVM alone, as a `Povm`.
#[pyfunction]
#[pyo3(signature = (povm, tol=None))]
fn minimal_sufficient(povm: &Povm, tol: Option<PyRef<'_, Tolerances>>) -> PyResult<Povm> {
    reduction::reduce(&povm.inner, &self::tol(tol))
        .map(|r| wrap(r.reduced))
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (povm, tol=None))]
fn is_pairwise_linearly_independent(povm: &Povm, tol: Option<PyRef<'_, Tolerances>>) -> bool {
    reduction::is_pairwise_linearly_independent(&povm.inner, &self::tol(tol))
}

#[pyfunction]
#[pyo3(signature = (a, b, tol=None))]
fn almost_isomorphic(
    a: &Povm,
    b: &Povm,
    tol: Option<PyRef<'_, Tolerances>>,
) -> PyResult<Option<BTreeMap<String, String>>> {
    reduction::almost_isomorphic(&a.inner, &b.inner, &self::tol(tol)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (a, b, tol=None))]
fn preceq<'py>(py: Python<'py>, a: &Povm, b: &Povm, tol: Option<PyRef<'_, Tolerances>>) -> PyResult<Bound<'py, PyAny>> {
    let v = order::preceq(&a.inner, &b.inner, &self::tol(tol)).map_err(err)?;
    to_py(py, &v)
}

#[pyfunction]
#[pyo3(signature = (a, b, method="reduce", tol=None))]
fn equivalent<'py>(
    py: Python<'py>,
    a: &Povm,
    b: &Povm,
    method: &str,
    tol: Option<PyRef<'_, Tolerances>>,
) -> PyResult<Bound<'py, PyAny>> {
    let method: EquivalenceMethod = method.parse().map_err(err)?;
    let v = order::equivalent(&a.inner, &b.inner, method, &self::tol(tol)).map_err(err)?;
    to_py(py, &v)
}

#[pyfunction]
fn f_divergence(f: &str, p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let f: FGenerator = f.parse().map_err(err)?;
    div::f_divergence(f, &p, &q).map_err(err)
}

#[pyfunction]
fn hellinger(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    div::hellinger(&p, &q).map_err(err)
}

#[pyfunction]
fn tv_metric(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    div::tv_metric(&p, &q).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (povm, rho, sigma, f="hellinger"))]
fn divergence(povm: &Povm, rho: &State, sigma: &State, f: &str) -> PyResult<f64> {
    let f: FGenerator = f.parse().map_err(err)?;
    div::divergence_between_states(f, &povm.inner, &rho.inner, &sigma.inner).map_err(err)
}

#[pyfunction]
fn trace_norm(matrix: Matrix) -> PyResult<f64> {
    matops::trace_norm(&to_hermitian(matrix)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (instrument, b, exhaustive_limit=DEFAULT_EXHAUSTIVE_LIMIT, tol=None))]
fn check_conservation<'py>(
    py: Python<'py>,
    instrument: &Instrument,
    b: &Povm,
    exhaustive_limit: u64,
    tol: Option<PyRef<'_, Tolerances>>,
) -> PyResult<Bound<'py, PyAny>> {
    let v =
        instrument::check_conservation(&instrument.inner, &b.inner, &self::tol(tol), exhaustive_limit).map_err(err)?;
    to_py(py, &v)
}

#[pyfunction]
fn random_split(povm: &Povm, rows: usize, seed: u64) -> PyResult<Povm> {
    generators::random_split(&povm.inner, rows, seed).map(wrap).map_err(err)
}

#[pyfunction]
fn tomographic_ensemble(py: Python<'_>, dim: usize) -> PyResult<Bound<'_, PyAny>> {
    if dim == 0 {
        return Err(PovmError::new_err("dim must be positive"));
    }
    to_py(py, &pv::tomographic_ensemble(dim).to_raw())
}

#[pyfunction]
fn fixture(name: &str) -> PyResult<String> {
    fixtures::lookup(name).ok_or_else(|| PovmError::new_err(format!("unknown fixture {name:?}")))
}

#[pyfunction]
#[pyo3(signature = (seed=0, trials=100, negative_control=false))]
fn run_selftest(py: Python<'_>, seed: u64, trials: usize, negative_control: bool) -> PyResult<Bound<'_, PyAny>> {
    let report = py.detach(|| {
        selftest::run(&SelftestConfig {
            seed,
            trials,
            negative_control,
            ..Default::default()
        })
    });
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "povm_reduce")]
pub fn povm_reduce_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("PovmError", py.get_type::<PovmError>())?;
    m.add("AmbiguityError", py.get_type::<AmbiguityError>())?;
    m.add_class::<Tolerances>()?;
    m.add_class::<Povm>()?;
    m.add_class::<State>()?;
    m.add_class::<Instrument>()?;
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_sufficient, m)?)?;
    m.add_function(wrap_pyfunction!(is_pairwise_linearly_independent, m)?)?;
    m.add_function(wrap_pyfunction!(almost_isomorphic, m)?)?;
    m.add_function(wrap_pyfunction!(preceq, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(f_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger, m)?)?;
    m.add_function(wrap_pyfunction!(tv_metric, m)?)?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(trace_norm, m)?)?;
    m.add_function(wrap_pyfunction!(check_conservation, m)?)?;
    m.add_function(wrap_pyfunction!(random_split, m)?)?;
    m.add_function(wrap_pyfunction!(tomographic_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
