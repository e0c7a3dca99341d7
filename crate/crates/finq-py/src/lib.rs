//! Python bindings: the financial store, the linking-function library, the
//! assistant loop, and the statistics used by the evaluation harness.
//!
//! Decimal values cross the boundary as strings to stay exact; parse them
//! with `decimal.Decimal` on the Python side when arithmetic is needed.

use std::path::PathBuf;
use std::str::FromStr;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList, PyString};

use finq::eval::{Alternative, PriceField};
use finq::period::Frequency;
use finq::protocol::{ChatBackend, RateCard, TokenUsage};
use finq::router::AssistantConfig;
use finq::store::Periodicity;

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

// ---------------------------------------------------------------------------
// JSON bridging
// ---------------------------------------------------------------------------

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match value {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        serde_json::Value::String(s) => PyString::new(py, s).into_any(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn py_to_json(value: &Bound<'_, PyAny>) -> PyResult<serde_json::Value> {
    if value.is_none() {
        return Ok(serde_json::Value::Null);
    }
    if let Ok(b) = value.cast::<PyBool>() {
        return Ok(serde_json::Value::Bool(b.is_true()));
    }
    if let Ok(i) = value.cast::<PyInt>() {
        return Ok(serde_json::Value::from(i.extract::<i64>()?));
    }
    if let Ok(f) = value.cast::<PyFloat>() {
        return Ok(serde_json::json!(f.extract::<f64>()?));
    }
    if let Ok(s) = value.cast::<PyString>() {
        return Ok(serde_json::Value::String(s.to_string()));
    }
    if let Ok(list) = value.cast::<PyList>() {
        let mut out = Vec::with_capacity(list.len());
        for item in list.iter() {
            out.push(py_to_json(&item)?);
        }
        return Ok(serde_json::Value::Array(out));
    }
    if let Ok(dict) = value.cast::<PyDict>() {
        let mut map = serde_json::Map::new();
        for (key, item) in dict.iter() {
            map.insert(key.extract::<String>()?, py_to_json(&item)?);
        }
        return Ok(serde_json::Value::Object(map));
    }
    Err(value_err(format!(
        "unsupported argument type: {}",
        value.get_type().name()?
    )))
}

fn serialize_to_py<'py, T: serde::Serialize>(
    py: Python<'py>,
    value: &T,
) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_value(value).map_err(runtime_err)?;
    json_to_py(py, &json)
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

/// Embedded relational store for prices, fundamentals, and company identity.
#[pyclass]
struct Store {
    inner: finq::store::Store,
}

#[pymethods]
impl Store {
    /// Open a file-backed store, or an in-memory one when `path` is None.
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<PathBuf>) -> PyResult<Self> {
        let inner = match path {
            Some(p) => finq::store::Store::open(p),
            None => finq::store::Store::in_memory(),
        }
        .map_err(runtime_err)?;
        Ok(Store { inner })
    }

    fn ingest_prices_csv<'py>(
        &self,
        py: Python<'py>,
        path: PathBuf,
    ) -> PyResult<Bound<'py, PyAny>> {
        let file = std::fs::File::open(path).map_err(runtime_err)?;
        let report = self.inner.ingest_prices(file).map_err(runtime_err)?;
        serialize_to_py(py, &report)
    }

    fn ingest_fundamentals_csv<'py>(
        &self,
        py: Python<'py>,
        path: PathBuf,
    ) -> PyResult<Bound<'py, PyAny>> {
        let file = std::fs::File::open(path).map_err(runtime_err)?;
        let report = self.inner.ingest_fundamentals(file).map_err(runtime_err)?;
        serialize_to_py(py, &report)
    }

    fn ingest_companies_csv<'py>(
        &self,
        py: Python<'py>,
        path: PathBuf,
    ) -> PyResult<Bound<'py, PyAny>> {
        let file = std::fs::File::open(path).map_err(runtime_err)?;
        let report = self.inner.ingest_companies(file).map_err(runtime_err)?;
        serialize_to_py(py, &report)
    }

    /// The n most recent trading days, ascending, as a list of dicts.
    #[pyo3(signature = (ticker, n, end=None))]
    fn last_n_trading_days<'py>(
        &self,
        py: Python<'py>,
        ticker: &str,
        n: usize,
        end: Option<&str>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let end = end
            .map(|s| chrono::NaiveDate::from_str(s).map_err(value_err))
            .transpose()?;
        let bars = self
            .inner
            .last_n_trading_days(ticker, n, end)
            .map_err(runtime_err)?;
        serialize_to_py(py, &bars)
    }

    #[pyo3(signature = (ticker, start, end, periodicity="daily"))]
    fn price_range<'py>(
        &self,
        py: Python<'py>,
        ticker: &str,
        start: &str,
        end: &str,
        periodicity: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let start = chrono::NaiveDate::from_str(start).map_err(value_err)?;
        let end = chrono::NaiveDate::from_str(end).map_err(value_err)?;
        let periodicity = Periodicity::from_str(periodicity).map_err(value_err)?;
        let bars = self
            .inner
            .price_range(ticker, start, end, periodicity)
            .map_err(runtime_err)?;
        serialize_to_py(py, &bars)
    }

    #[pyo3(signature = (ticker, metric, n_periods, frequency="quarterly"))]
    fn fundamental_series<'py>(
        &self,
        py: Python<'py>,
        ticker: &str,
        metric: &str,
        n_periods: usize,
        frequency: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let frequency = Frequency::from_str(frequency).map_err(value_err)?;
        let records = self
            .inner
            .fundamental_series(ticker, metric, n_periods, frequency)
            .map_err(runtime_err)?;
        serialize_to_py(py, &records)
    }

    /// Deterministic content hash, for write-impossibility checks.
    fn content_hash(&self) -> PyResult<String> {
        self.inner.content_hash().map_err(runtime_err)
    }

    /// Exact registry lookup of a company name or alias.
    fn resolve_name(&self, name: &str) -> PyResult<String> {
        finq::resolver::resolve_local(&self.inner, name).map_err(runtime_err)
    }
}

// ---------------------------------------------------------------------------
// Query library
// ---------------------------------------------------------------------------

/// The standard linking-function catalog.
#[pyclass]
struct QueryLibrary {
    inner: finq::library::QueryLibrary,
}

#[pymethods]
impl QueryLibrary {
    #[new]
    fn new() -> Self {
        QueryLibrary {
            inner: finq::library::QueryLibrary::standard(),
        }
    }

    /// Registered linking-function names.
    fn catalog(&self) -> Vec<String> {
        self.inner
            .catalog()
            .iter()
            .map(|f| f.name.clone())
            .collect()
    }

    /// Machine-readable tool schemas, one per linking function.
    fn tool_specs<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize_to_py(py, &self.inner.to_tool_specs())
    }

    /// Validate, coerce, and default a raw argument dict.
    fn validate_args<'py>(
        &self,
        py: Python<'py>,
        function: &str,
        args: &Bound<'py, PyAny>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let raw = py_to_json(args)?;
        let validated = self
            .inner
            .validate_args(function, &raw)
            .map_err(value_err)?;
        json_to_py(py, &validated.to_value())
    }

    /// Validate then execute against a store; returns a table dict.
    fn execute<'py>(
        &self,
        py: Python<'py>,
        function: &str,
        args: &Bound<'py, PyAny>,
        store: PyRef<'py, Store>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let raw = py_to_json(args)?;
        let validated = self
            .inner
            .validate_args(function, &raw)
            .map_err(value_err)?;
        let table = self
            .inner
            .execute(&validated, &store.inner)
            .map_err(runtime_err)?;
        serialize_to_py(py, &table)
    }
}

// ---------------------------------------------------------------------------
// Backends and the assistant
// ---------------------------------------------------------------------------

/// A chat backend: deterministic scripted mock or live HTTP.
#[pyclass]
struct Backend {
    inner: Box<dyn ChatBackend>,
}

#[pymethods]
impl Backend {
    /// Load a mock script file (the documented JSON fixture format).
    #[staticmethod]
    fn mock_from_file(path: PathBuf) -> PyResult<Self> {
        let mock = finq::protocol::MockBackend::from_script_file(path).map_err(value_err)?;
        Ok(Backend {
            inner: Box::new(mock),
        })
    }

    /// Build a mock from a JSON script string.
    #[staticmethod]
    fn mock_from_json(text: &str) -> PyResult<Self> {
        let script: finq::protocol::MockScript = serde_json::from_str(text).map_err(value_err)?;
        Ok(Backend {
            inner: Box::new(finq::protocol::MockBackend::new(script.entries)),
        })
    }

    /// Live chat-completions backend; the key is read from `api_key_env`.
    #[staticmethod]
    #[pyo3(signature = (base_url, api_key_env="OPENAI_API_KEY", timeout_secs=60))]
    fn live(base_url: &str, api_key_env: &str, timeout_secs: u64) -> PyResult<Self> {
        let http = finq::protocol::HttpBackend::new(
            base_url,
            api_key_env,
            std::time::Duration::from_secs(timeout_secs),
        )
        .map_err(value_err)?;
        Ok(Backend {
            inner: Box::new(http),
        })
    }
}

/// The question → tool call → execute → answer loop.
#[pyclass]
struct Assistant {
    store: Py<Store>,
    backend: Py<Backend>,
    library: finq::library::QueryLibrary,
    rate_card: RateCard,
    model: String,
    max_tool_rounds: usize,
}

#[pymethods]
impl Assistant {
    #[new]
    #[pyo3(signature = (store, backend, model="mock-model", rate_card_csv=None, max_tool_rounds=3))]
    fn new(
        store: Py<Store>,
        backend: Py<Backend>,
        model: &str,
        rate_card_csv: Option<PathBuf>,
        max_tool_rounds: usize,
    ) -> PyResult<Self> {
        let rate_card = match rate_card_csv {
            Some(path) => {
                let file = std::fs::File::open(path).map_err(runtime_err)?;
                RateCard::from_csv(file).map_err(value_err)?
            }
            None => {
                let mut card = RateCard::default();
                card.insert(
                    model,
                    rust_decimal::Decimal::from_str("2.50").unwrap(),
                    rust_decimal::Decimal::from_str("10.00").unwrap(),
                );
                card
            }
        };
        Ok(Assistant {
            store,
            backend,
            library: finq::library::QueryLibrary::standard(),
            rate_card,
            model: model.to_string(),
            max_tool_rounds,
        })
    }

    /// Answer one question; returns the full result (outcome, tables,
    /// trace, totals) as nested dicts.
    fn ask<'py>(&self, py: Python<'py>, question: &str) -> PyResult<Bound<'py, PyAny>> {
        let store = self.store.borrow(py);
        let backend = self.backend.borrow(py);
        let mut config = AssistantConfig::new(&self.model);
        config.max_tool_rounds = self.max_tool_rounds;
        let assistant = finq::router::Assistant::new(
            backend.inner.as_ref(),
            &store.inner,
            &self.library,
            &self.rate_card,
            config,
        )
        .map_err(value_err)?;
        let result = assistant.answer(question);
        serialize_to_py(py, &result)
    }
}

// ---------------------------------------------------------------------------
// Statistics and helpers
// ---------------------------------------------------------------------------

/// One-sided Welch's t-test; `alternative` is "less" or "greater".
#[pyfunction]
#[pyo3(signature = (x, y, alternative="less"))]
fn welch_one_sided<'py>(
    py: Python<'py>,
    x: Vec<f64>,
    y: Vec<f64>,
    alternative: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let alternative = match alternative {
        "less" => Alternative::Less,
        "greater" => Alternative::Greater,
        other => return Err(value_err(format!("unknown alternative `{other}`"))),
    };
    let result = finq::eval::welch_one_sided(&x, &y, alternative).map_err(value_err)?;
    serialize_to_py(py, &result)
}

/// P(T <= t) for Student's t with `nu` degrees of freedom.
#[pyfunction]
fn t_cdf(t: f64, nu: f64) -> f64 {
    finq::eval::t_cdf(t, nu)
}

/// Natural log of the mean squared error.
#[pyfunction]
fn log_mse<'py>(
    py: Python<'py>,
    predictions: Vec<f64>,
    truths: Vec<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let result = finq::eval::log_mse(&predictions, &truths).map_err(value_err)?;
    serialize_to_py(py, &result)
}

/// Normalize raw model output to a comparable ticker symbol.
#[pyfunction]
fn normalize_ticker(raw: &str) -> String {
    finq::resolver::normalize_ticker(raw)
}

/// Write the deterministic synthetic fixture CSVs into a directory.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=7))]
fn generate_fixture_csvs(out_dir: PathBuf, seed: u64) -> PyResult<()> {
    let config = finq::fixtures::FixtureConfig {
        seed,
        ..finq::fixtures::FixtureConfig::default()
    };
    finq::fixtures::generate(&config)
        .write_to(out_dir)
        .map_err(runtime_err)
}

/// Parse a benchmark suite (one query per line) into case dicts with the
/// expected tool call per case.
#[pyfunction]
fn parse_suite<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    let cases = finq::eval::parse_suite(text).map_err(value_err)?;
    let list = PyList::empty(py);
    for case in cases {
        let dict = PyDict::new(py);
        dict.set_item("index", case.index)?;
        dict.set_item("question", &case.question)?;
        dict.set_item("entity", &case.entity)?;
        dict.set_item("function", &case.function)?;
        dict.set_item("arguments", json_to_py(py, &case.arguments)?)?;
        list.append(dict)?;
    }
    Ok(list.into_any())
}

/// Exact decimal token cost for one usage at the given per-million rates.
#[pyfunction]
fn token_cost(
    prompt_tokens: u64,
    completion_tokens: u64,
    input_rate_per_1m: &str,
    output_rate_per_1m: &str,
) -> PyResult<String> {
    let mut card = RateCard::default();
    card.insert(
        "m",
        rust_decimal::Decimal::from_str(input_rate_per_1m).map_err(value_err)?,
        rust_decimal::Decimal::from_str(output_rate_per_1m).map_err(value_err)?,
    );
    let cost = card
        .cost("m", TokenUsage::new(prompt_tokens, completion_tokens))
        .map_err(value_err)?;
    Ok(cost.to_string())
}

/// The bundled benchmark suite text.
#[pyfunction]
fn bundled_suite() -> &'static str {
    finq::eval::BUNDLED_SUITE
}

#[pymodule]
fn finq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Store>()?;
    m.add_class::<QueryLibrary>()?;
    m.add_class::<Backend>()?;
    m.add_class::<Assistant>()?;
    m.add_function(wrap_pyfunction!(welch_one_sided, m)?)?;
    m.add_function(wrap_pyfunction!(t_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(log_mse, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_ticker, m)?)?;
    m.add_function(wrap_pyfunction!(generate_fixture_csvs, m)?)?;
    m.add_function(wrap_pyfunction!(parse_suite, m)?)?;
    m.add_function(wrap_pyfunction!(token_cost, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_suite, m)?)?;
    m.add(
        "PRICE_FIELD_DEFAULT",
        format!("{:?}", PriceField::Close).to_lowercase(),
    )?;
    Ok(())
}
