//! Python bindings: grids, densities, analytic profiles, functionals, the
//! solver and the verdict checks.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;

use renyi_core::functionals::{self as fun, FunctionalSnapshot};
use renyi_core::initial::InitialData;
use renyi_core::profiles::{self, BarenblattSpec, Convention};
use renyi_core::solver::{self, Boundary, DiffusionParams};
use renyi_core::verification::{Check, ExperimentReport, Tolerances};
use renyi_core::{DensityField, Error, Geometry, Grid};

create_exception!(renyi, StabilityError, PyException, "The explicit solver could not take a stable step.");
create_exception!(renyi, InsufficientDataError, PyValueError, "Too few snapshots for a check.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Stability { .. } => StabilityError::new_err(e.to_string()),
        Error::InsufficientData { .. } => InsufficientDataError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Uniform cell-centred grid: `cartesian1d` on `[-R, R]` or radial on `[0, R]`.
#[pyclass(name = "Grid", module = "renyi", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(Grid);

#[pymethods]
impl PyGrid {
    #[staticmethod]
    fn cartesian(nodes: usize, radius: f64) -> PyResult<Self> {
        Grid::cartesian(nodes, radius).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn radial(dim: u32, nodes: usize, radius: f64) -> PyResult<Self> {
        Grid::radial(dim, nodes, radius).map(Self).map_err(to_py)
    }

    #[getter]
    fn nodes(&self) -> usize {
        self.0.nodes
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing
    }

    #[getter]
    fn dim(&self) -> u32 {
        self.0.dim()
    }

    #[getter]
    fn radial_geometry(&self) -> bool {
        self.0.is_radial()
    }

    fn coordinates(&self) -> Vec<f64> {
        self.0.coordinates()
    }

    /// Quadrature weights, including the sphere area factor when radial.
    fn weights(&self) -> Vec<f64> {
        self.0.weights()
    }

    fn __repr__(&self) -> String {
        let kind = match self.0.geometry {
            Geometry::Cartesian1d => "cartesian1d".to_string(),
            Geometry::Radial { dim } => format!("radial(n={dim})"),
        };
        format!("Grid({kind}, nodes={}, extent={})", self.0.nodes, self.0.extent())
    }
}

/// Nonnegative density sampled on a grid.
#[pyclass(name = "DensityField", module = "renyi", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDensity(DensityField);

#[pymethods]
impl PyDensity {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        DensityField::new(grid.0, values).map(Self).map_err(to_py)
    }

    /// Initial data by name (`barenblatt`, `gaussian`, `mixture`,
    /// `two-bump`, `compact-two-bump`, `file:PATH`), normalized to unit mass.
    #[staticmethod]
    #[pyo3(signature = (grid, kind, p, t_start, seed=0))]
    fn initial(grid: &PyGrid, kind: &str, p: f64, t_start: f64, seed: u64) -> PyResult<Self> {
        let data: InitialData = kind.parse().map_err(to_py)?;
        data.with_seed(seed).sample(grid.0, p, t_start).map(Self).map_err(to_py)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn normalized(&self) -> Self {
        Self(self.0.clone().normalized())
    }

    /// The mass-preserving dilation `a^{-n} f(x/a)`.
    fn rescale(&self, a: f64) -> PyResult<Self> {
        fun::rescale(&self.0, a).map(Self).map_err(to_py)
    }

    #[pyo3(signature = (p, t=0.0, with_dissipation=false))]
    fn functionals(&self, p: f64, t: f64, with_dissipation: bool) -> PyResult<Snapshot> {
        FunctionalSnapshot::compute(&self.0, p, t, with_dissipation).map(Snapshot).map_err(to_py)
    }

    fn upsilon(&self, p: f64) -> PyResult<f64> {
        fun::upsilon(&self.0, p).map_err(to_py)
    }
}

/// Every functional of one density at one time.
#[pyclass(name = "Snapshot", module = "renyi", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Snapshot(FunctionalSnapshot);

#[pymethods]
impl Snapshot {
    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }
    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass
    }
    #[getter]
    fn e_p(&self) -> f64 {
        self.0.e_p
    }
    #[getter]
    fn h_p(&self) -> f64 {
        self.0.h_p
    }
    #[getter]
    fn n_p(&self) -> f64 {
        self.0.n_p
    }
    #[getter]
    fn f_p(&self) -> f64 {
        self.0.f_p
    }
    #[getter]
    fn i_p(&self) -> f64 {
        self.0.i_p
    }
    #[getter]
    fn d_p(&self) -> Option<f64> {
        self.0.d_p
    }
    #[getter]
    fn upsilon(&self) -> f64 {
        self.0.upsilon
    }

    fn __repr__(&self) -> String {
        format!("Snapshot(t={}, N_p={}, upsilon={})", self.0.t, self.0.n_p, self.0.upsilon)
    }
}

/// Barenblatt profile for exponent `p` in dimension `n`.
#[pyclass(name = "Barenblatt", module = "renyi", frozen, skip_from_py_object)]
struct PyBarenblatt(BarenblattSpec);

#[pymethods]
impl PyBarenblatt {
    /// `convention` is `standard` or `self-similar`.
    #[new]
    #[pyo3(signature = (p, n, convention="standard"))]
    fn new(p: f64, n: u32, convention: &str) -> PyResult<Self> {
        let convention = match convention {
            "standard" => Convention::Standard,
            "self-similar" => Convention::SelfSimilar,
            other => {
                return Err(PyValueError::new_err(format!(
                    "analytic_profiles: unknown convention {other:?} (standard or self-similar)"
                )))
            }
        };
        BarenblattSpec::new(p, n, convention).map(Self).map_err(to_py)
    }

    fn profile(&self, r: f64) -> f64 {
        self.0.profile(r)
    }

    /// The source solution at radius `r` and time `t` (self-similar convention).
    fn self_similar(&self, r: f64, t: f64) -> PyResult<f64> {
        self.0.self_similar(r, t).map_err(to_py)
    }

    fn support_radius(&self) -> Option<f64> {
        self.0.support_radius()
    }

    fn entropy(&self) -> PyResult<f64> {
        self.0.entropy().map_err(to_py)
    }

    fn fisher(&self) -> PyResult<f64> {
        self.0.fisher().map_err(to_py)
    }

    fn entropy_power(&self) -> PyResult<f64> {
        self.0.entropy_power().map_err(to_py)
    }

    fn upsilon(&self) -> PyResult<f64> {
        self.0.upsilon().map_err(to_py)
    }
}

/// `(mu, nu)` for exponent `p` in dimension `n`.
#[pyfunction]
fn coefficients(p: f64, n: u32) -> PyResult<(f64, f64)> {
    let c = profiles::coefficients(p, n).map_err(to_py)?;
    Ok((c.mu, c.nu))
}

/// The sharp constant of the isoperimetric inequality for `N_p I_p`.
#[pyfunction]
fn gamma_const(p: f64, n: u32) -> PyResult<f64> {
    profiles::gamma_const(p, n).map_err(to_py)
}

#[pyfunction]
fn sobolev_constant(n: u32) -> PyResult<f64> {
    profiles::sobolev_constant(n).map_err(to_py)
}

#[pyfunction]
fn barenblatt_a(p: f64, n: u32) -> PyResult<f64> {
    profiles::barenblatt_a(p, n).map_err(to_py)
}

#[pyfunction]
fn barenblatt_c(p: f64, n: u32) -> PyResult<f64> {
    profiles::barenblatt_c(p, n).map_err(to_py)
}

/// Solver output: snapshot fields and their functionals.
#[pyclass(name = "Run", module = "renyi", frozen, skip_from_py_object)]
struct PyRun(solver::Run);

#[pymethods]
impl PyRun {
    fn series(&self) -> Vec<Snapshot> {
        self.0.series().into_iter().map(Snapshot).collect()
    }

    fn fields(&self) -> Vec<PyDensity> {
        self.0.snapshots.iter().map(|s| PyDensity(s.field.clone())).collect()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.0.steps
    }

    #[getter]
    fn rejected_steps(&self) -> usize {
        self.0.rejected_steps
    }

    #[getter]
    fn mass_drift(&self) -> f64 {
        self.0.mass_drift()
    }

    #[getter]
    fn leak_estimate(&self) -> f64 {
        self.0.leak_estimate
    }
}

/// Evolves unit-mass data under `u_t = Δu^p` with uniformly spaced
/// snapshots on `[t_start, t_end]`.
#[pyfunction]
#[pyo3(signature = (field, p, t_start, t_end, snapshots, cfl=0.45, boundary="zero-flux", with_dissipation=false))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    field: &PyDensity,
    p: f64,
    t_start: f64,
    t_end: f64,
    snapshots: usize,
    cfl: f64,
    boundary: &str,
    with_dissipation: bool,
) -> PyResult<PyRun> {
    let boundary = match boundary {
        "zero-flux" => Boundary::ZeroFlux,
        "absorbing" => Boundary::Absorbing,
        other => {
            return Err(PyValueError::new_err(format!(
                "pme_solver: unknown boundary {other:?} (zero-flux or absorbing)"
            )))
        }
    };
    let mut params = DiffusionParams::uniform(p, t_start, t_end, snapshots);
    params.cfl_safety = cfl;
    params.boundary = boundary;
    params.with_dissipation = with_dissipation;
    let f0 = field.0.clone();
    py.detach(|| solver::evolve(&f0, &params)).map(PyRun).map_err(to_py)
}

/// One pass/fail outcome.
#[pyclass(name = "Verdict", module = "renyi", frozen, get_all)]
struct PyVerdict {
    check: String,
    value: f64,
    tolerance: f64,
    passed: bool,
    detail: String,
}

#[pymethods]
impl PyVerdict {
    fn __repr__(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("Verdict({}: {} vs {} {status})", self.check, self.value, self.tolerance)
    }
}

/// Runs the named checks (`concavity`, `debruijn`, `dissipation`,
/// `upsilon`, `isoperimetric`) on a snapshot series.
#[pyfunction]
#[pyo3(signature = (series, p, n, checks, concavity=None, debruijn=None, dissipation=None, isoperimetric=None, upsilon=None))]
#[allow(clippy::too_many_arguments)]
fn verify(
    series: Vec<PyRef<'_, Snapshot>>,
    p: f64,
    n: u32,
    checks: Vec<String>,
    concavity: Option<f64>,
    debruijn: Option<f64>,
    dissipation: Option<f64>,
    isoperimetric: Option<f64>,
    upsilon: Option<f64>,
) -> PyResult<Vec<PyVerdict>> {
    let checks: Vec<Check> = checks.iter().map(|c| c.parse()).collect::<Result<_, _>>().map_err(to_py)?;
    let d = Tolerances::default();
    let tol = Tolerances {
        concavity: concavity.unwrap_or(d.concavity),
        debruijn: debruijn.unwrap_or(d.debruijn),
        dissipation: dissipation.unwrap_or(d.dissipation),
        isoperimetric: isoperimetric.unwrap_or(d.isoperimetric),
        upsilon: upsilon.unwrap_or(d.upsilon),
    };
    let series: Vec<FunctionalSnapshot> = series.iter().map(|s| s.0).collect();
    let report = ExperimentReport::from_series(&series, p, n, &checks, &tol).map_err(to_py)?;
    Ok(report
        .verdicts
        .into_iter()
        .map(|v| PyVerdict { check: v.check, value: v.value, tolerance: v.tolerance, passed: v.passed, detail: v.detail })
        .collect())
}

#[pymodule]
fn renyi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<Snapshot>()?;
    m.add_class::<PyBarenblatt>()?;
    m.add_class::<PyRun>()?;
    m.add_class::<PyVerdict>()?;
    m.add_function(wrap_pyfunction!(coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_const, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_constant, m)?)?;
    m.add_function(wrap_pyfunction!(barenblatt_a, m)?)?;
    m.add_function(wrap_pyfunction!(barenblatt_c, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("StabilityError", m.py().get_type::<StabilityError>())?;
    m.add("InsufficientDataError", m.py().get_type::<InsufficientDataError>())?;
    Ok(())
}
