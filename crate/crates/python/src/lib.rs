//! Python bindings: `import sundman`.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde_json::Value;
use sundman_core::demo::run_demo;
use sundman_core::document::SodeDocument;
use sundman_core::sode1d::{self, GenSundman, LinearisationOutcome, QuadraticSode};
use sundman_core::sodend::{self, BasicFunction, SodeField};
use sundman_core::verify::{verify_linearisation, VerifyOptions};
use sundman_core::{Interval, RunConfig};

create_exception!(sundman, SundmanError, PyException);

fn err(e: sundman_core::Error) -> PyErr {
    SundmanError::new_err(e.to_string())
}

fn interval((lo, hi): (f64, f64)) -> PyResult<Interval> {
    Interval::new(lo, hi).map_err(err)
}

fn pair(i: Interval) -> (f64, f64) {
    (i.lo(), i.hi())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| SundmanError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn serialize<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(v).map_err(|e| SundmanError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn params_of(params: Option<Vec<(String, f64)>>) -> Vec<(String, f64)> {
    params.unwrap_or_default()
}

fn borrowed(params: &[(String, f64)]) -> Vec<(&str, f64)> {
    params.iter().map(|(k, v)| (k.as_str(), *v)).collect()
}

fn config(q_tol: Option<f64>, ivp_tol: Option<f64>, base_point: Option<f64>, auto_split: bool) -> PyResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(v) = q_tol {
        cfg.q_tol = v;
    }
    if let Some(v) = ivp_tol {
        cfg.ivp_tol = v;
    }
    cfg.base_point = base_point;
    cfg.auto_split = auto_split;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Parsed expression over named variables.
#[pyclass(name = "Expr", module = "sundman", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyExpr(sundman_core::Expr);

#[pymethods]
impl PyExpr {
    #[new]
    #[pyo3(signature = (text, variables))]
    fn new(text: &str, variables: Vec<String>) -> PyResult<Self> {
        let names: Vec<&str> = variables.iter().map(String::as_str).collect();
        sundman_core::parse(text, &names).map(Self).map_err(err)
    }

    #[pyo3(signature = (**values))]
    fn eval(&self, values: Option<&Bound<'_, PyDict>>) -> PyResult<f64> {
        let env: Vec<(String, f64)> = match values {
            Some(d) => d.iter().map(|(k, v)| Ok((k.extract()?, v.extract()?))).collect::<PyResult<_>>()?,
            None => Vec::new(),
        };
        self.0.eval(&borrowed(&env)).map_err(err)
    }

    fn diff(&self, var: &str) -> Self {
        Self(sundman_core::simplify(&sundman_core::differentiate(&self.0, var)))
    }

    fn simplify(&self) -> Self {
        Self(sundman_core::simplify(&self.0))
    }

    fn variables(&self) -> Vec<String> {
        self.0.variables().into_iter().collect()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr('{}')", self.0)
    }
}

/// Generalised Sundman transformation `(dτ/dt = h(x), y = φ(x))`.
#[pyclass(name = "Transform", module = "sundman", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTransform(GenSundman);

#[pymethods]
impl PyTransform {
    #[new]
    #[pyo3(signature = (h, phi, domain, params=None))]
    fn new(h: &str, phi: &str, domain: (f64, f64), params: Option<Vec<(String, f64)>>) -> PyResult<Self> {
        let params = params_of(params);
        GenSundman::parse(h, phi, interval(domain)?, &borrowed(&params)).map(Self).map_err(err)
    }

    #[staticmethod]
    fn identity(domain: (f64, f64)) -> PyResult<Self> {
        Ok(Self(GenSundman::identity(interval(domain)?)))
    }

    /// `(h(x), φ(x))`.
    fn eval(&self, x: f64) -> PyResult<(f64, f64)> {
        self.0.eval(x).map_err(err)
    }

    /// `(y, dy/dτ)` for a state `(x, dx/dt)`.
    fn map_state(&self, x: f64, v: f64) -> PyResult<(f64, f64)> {
        self.0.map_state(x, v).map_err(err)
    }

    #[pyo3(signature = (tol=1e-12))]
    fn inverse(&self, tol: f64) -> PyResult<Self> {
        self.0.inverse(tol).map(Self).map_err(err)
    }

    /// `self ∘ first`: apply `first`, then `self`.
    fn after(&self, first: &PyTransform) -> PyResult<Self> {
        sode1d::compose(&self.0, &first.0).map(Self).map_err(err)
    }

    #[getter]
    fn h(&self) -> String {
        self.0.h_dtau_per_dt().to_string()
    }

    #[getter]
    fn phi(&self) -> String {
        self.0.phi().to_string()
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        pair(self.0.domain())
    }

    fn to_json(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &sode1d::transform_json(&self.0))
    }

    fn __repr__(&self) -> String {
        format!("Transform(h='{}', phi='{}', domain={})", self.h(), self.phi(), self.0.domain())
    }
}

/// `ẍ + γ(x)ẋ² + A(x)ẋ + b(x) = 0` on an open interval.
#[pyclass(name = "Sode", module = "sundman", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySode(QuadraticSode);

#[pymethods]
impl PySode {
    #[new]
    #[pyo3(signature = (gamma, a, b, domain, params=None))]
    fn new(gamma: &str, a: &str, b: &str, domain: (f64, f64), params: Option<Vec<(String, f64)>>) -> PyResult<Self> {
        let params = params_of(params);
        QuadraticSode::parse(gamma, a, b, interval(domain)?, &borrowed(&params))
            .map(Self)
            .map_err(err)
    }

    /// `(γ, A, b)` at `x`.
    fn coefficients(&self, x: f64) -> PyResult<(f64, f64, f64)> {
        self.0.coefficients_at(x).map_err(err)
    }

    fn acceleration(&self, x: f64, v: f64) -> PyResult<f64> {
        self.0.acceleration(x, v).map_err(err)
    }

    fn q(&self, x: f64) -> PyResult<f64> {
        self.0.q_invariant().eval(x).map_err(err)
    }

    fn p(&self, x: f64) -> PyResult<f64> {
        self.0.p_invariant().eval(x).map_err(err)
    }

    #[pyo3(signature = (n=64, tol=1e-9))]
    fn q_test(&self, py: Python<'_>, n: usize, tol: f64) -> PyResult<Py<PyAny>> {
        serialize(py, &self.0.q_test(n, tol).map_err(err)?)
    }

    #[pyo3(signature = (*, q_tol=None, ivp_tol=None, base_point=None))]
    fn linearize(&self, q_tol: Option<f64>, ivp_tol: Option<f64>, base_point: Option<f64>) -> PyResult<PyLinearisation> {
        let cfg = config(q_tol, ivp_tol, base_point, false)?;
        sode1d::linearize(&self.0, &cfg).map(PyLinearisation).map_err(err)
    }

    /// Linearise each piece between sign changes of the dividing coefficient.
    #[pyo3(signature = (*, q_tol=None, ivp_tol=None, base_point=None))]
    fn linearize_split(
        &self,
        q_tol: Option<f64>,
        ivp_tol: Option<f64>,
        base_point: Option<f64>,
    ) -> PyResult<Vec<PyLinearisation>> {
        let cfg = config(q_tol, ivp_tol, base_point, true)?;
        let pieces = sode1d::linearize_split(&self.0, &cfg).map_err(err)?;
        Ok(pieces.into_iter().map(PyLinearisation).collect())
    }

    #[pyo3(signature = (transform, tol=1e-10))]
    fn apply(&self, transform: &PyTransform, tol: f64) -> PyResult<Self> {
        self.0.apply_transform(&transform.0, tol).map(Self).map_err(err)
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        pair(self.0.domain())
    }

    fn __repr__(&self) -> String {
        format!(
            "Sode(gamma='{}', a='{}', b='{}', domain={})",
            self.0.gamma(),
            self.0.a(),
            self.0.b(),
            self.0.domain()
        )
    }
}

#[pyclass(name = "Linearisation", module = "sundman", frozen, skip_from_py_object)]
struct PyLinearisation(sode1d::Linearisation);

#[pymethods]
impl PyLinearisation {
    #[getter]
    fn case(&self) -> &'static str {
        self.0.outcome.case()
    }

    #[getter]
    fn linearisable(&self) -> bool {
        self.0.outcome.is_linearisable()
    }

    /// `(α, B, C)` of `y″ + αy′ + By + C = 0`, or None.
    #[getter]
    fn target(&self) -> Option<(f64, f64, f64)> {
        self.0.outcome.target()
    }

    #[getter]
    fn transform(&self) -> Option<PyTransform> {
        self.0.outcome.transform().cloned().map(PyTransform)
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        pair(self.0.domain)
    }

    fn to_json(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.to_json())
    }

    fn describe(&self) -> String {
        self.0.describe()
    }

    fn __repr__(&self) -> String {
        format!("Linearisation(case='{}', domain={})", self.case(), self.0.domain)
    }
}

/// `ẍⁱ = Xⁱ(x, v)` in positions `x1..xn`, velocities `v1..vn` (`x`, `v` when n = 1).
#[pyclass(name = "Field", module = "sundman", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(SodeField);

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (components, domain, params=None))]
    fn new(components: Vec<String>, domain: Vec<(f64, f64)>, params: Option<Vec<(String, f64)>>) -> PyResult<Self> {
        let params = params_of(params);
        let comps: Vec<&str> = components.iter().map(String::as_str).collect();
        let domain = domain.into_iter().map(interval).collect::<PyResult<Vec<_>>>()?;
        SodeField::parse(&comps, domain, &borrowed(&params)).map(Self).map_err(err)
    }

    fn eval(&self, x: Vec<f64>, v: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.eval(&x, &v).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn components(&self) -> Vec<String> {
        self.0.components().iter().map(|c| c.to_string()).collect()
    }

    fn check_linear(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        serialize(py, &sodend::check_linear(&self.0).map_err(err)?)
    }

    fn check_inhomogeneous_linear(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        serialize(py, &sodend::check_inhomogeneous_linear(&self.0).map_err(err)?)
    }

    fn check_fibre_linear(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &sodend::check_fibre_linear(&self.0).map_err(err)?.to_json())
    }

    /// Time change `dτ/dt = 1/f` with quasi-velocities `f·v`.
    #[pyo3(signature = (f, params=None))]
    fn transform(&self, f: &str, params: Option<Vec<(String, f64)>>) -> PyResult<Self> {
        let params = params_of(params);
        let f = BasicFunction::parse(f, self.0.domain().to_vec(), &borrowed(&params)).map_err(err)?;
        sodend::transform_system(&self.0, &f).map(Self).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Field({:?})", self.components())
    }
}

/// Integrate the equation and its linearisation and compare trajectories.
#[pyfunction]
#[pyo3(signature = (sode, linearisation, x0, v0, t_end, tol=1e-6, ivp_tol=None))]
fn verify(
    py: Python<'_>,
    sode: &PySode,
    linearisation: &PyLinearisation,
    x0: f64,
    v0: f64,
    t_end: f64,
    tol: f64,
    ivp_tol: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let cfg = config(None, ivp_tol, None, false)?;
    let s = sode.0.restrict(linearisation.0.domain).map_err(err)?;
    let outcome: &LinearisationOutcome = &linearisation.0.outcome;
    let report = verify_linearisation(&s, outcome, x0, v0, t_end, &VerifyOptions::new(tol, &cfg)).map_err(err)?;
    to_py(py, &report.to_json())
}

/// Linearise a JSON equation document, one result per piece.
#[pyfunction]
#[pyo3(signature = (text, *, q_tol=None, ivp_tol=None, base_point=None, auto_split=false))]
fn linearize_document(
    text: &str,
    q_tol: Option<f64>,
    ivp_tol: Option<f64>,
    base_point: Option<f64>,
    auto_split: bool,
) -> PyResult<Vec<PyLinearisation>> {
    let cfg = config(q_tol, ivp_tol, base_point, auto_split)?;
    let doc = SodeDocument::from_json(text).map_err(err)?;
    let pieces = doc.linearize(&cfg).map_err(err)?;
    Ok(pieces.into_iter().map(PyLinearisation).collect())
}

/// Run a bundled example; returns its JSON report with `passed` and `summary`.
#[pyfunction]
fn demo(py: Python<'_>, name: &str) -> PyResult<Py<PyAny>> {
    let r = run_demo(name, &RunConfig::default()).map_err(err)?;
    let mut json = r.json;
    if let Value::Object(m) = &mut json {
        m.insert("passed".into(), r.passed.into());
        m.insert("summary".into(), r.summary.into());
    }
    to_py(py, &json)
}

#[pyfunction]
fn demo_names() -> Vec<&'static str> {
    sundman_core::demo::DEMO_NAMES.to_vec()
}

#[pymodule]
fn sundman(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SundmanError", m.py().get_type::<SundmanError>())?;
    m.add_class::<PyExpr>()?;
    m.add_class::<PyTransform>()?;
    m.add_class::<PySode>()?;
    m.add_class::<PyLinearisation>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(linearize_document, m)?)?;
    m.add_function(wrap_pyfunction!(demo, m)?)?;
    m.add_function(wrap_pyfunction!(demo_names, m)?)?;
    Ok(())
}
