//! The linking-function library: the small, auditable surface between the
//! model and the store.
//!
//! Each linking function pairs a tool schema shown to the model with a
//! vetted template from the registry. Model-supplied arguments are
//! validated and coerced here; execution delegates to the store operations,
//! which bind parameters through the driver. Statement text is never
//! assembled from user input.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::{Duration, Instant};

use chrono::{Months, NaiveDate};
use rust_decimal::Decimal;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::period::{FiscalPeriod, Frequency};
use crate::protocol::ToolSpec;
use crate::resolver;
use crate::store::{PeriodSelector, Periodicity, StatementBundle, Store, StoreError};
use crate::templates::TemplateRegistry;
use crate::vocab::{StatementKind, Vocabulary};

pub const GET_STOCK_PRICE: &str = "get_stock_price";
pub const GET_FUNDAMENTAL_METRIC: &str = "get_fundamental_metric";
pub const GET_FINANCIAL_STATEMENT: &str = "get_financial_statement";

/// A tool the model can call: name, description, and the template it
/// ultimately executes.
#[derive(Debug, Clone, Serialize)]
pub struct LinkingFunction {
    pub name: String,
    pub description: String,
    pub template_id: String,
}

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error("linking function `{0}` registered twice")]
    DuplicateName(String),
    #[error("linking function `{name}` references unknown template `{template}`")]
    UnknownTemplate { name: String, template: String },
}

/// Validation failures for model-supplied arguments.
#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("missing required parameter `{0}`")]
    MissingParameter(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
}

impl ValidationError {
    fn invalid(name: &str, reason: impl Into<String>) -> Self {
        ValidationError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

/// A complete, coerced, defaulted argument set for one linking function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedArgs {
    pub function: String,
    pub args: Map<String, Value>,
}

impl ValidatedArgs {
    pub fn to_value(&self) -> Value {
        Value::Object(self.args.clone())
    }
}

/// One cell of a result table. Decimals serialize as strings to stay exact
/// on the wire.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Null,
    Int(i64),
    Dec(Decimal),
    Text(String),
}

impl Cell {
    /// Canonical text form used for judging equality across routes.
    pub fn canonical(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Dec(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Null => serializer.serialize_none(),
            Cell::Int(v) => serializer.serialize_i64(*v),
            Cell::Dec(v) => serializer.serialize_str(&v.to_string()),
            Cell::Text(s) => serializer.serialize_str(s),
        }
    }
}

/// Tabular result of one linking-function execution.
#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    pub function: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub row_count: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl ResultTable {
    pub fn new(function: &str, columns: Vec<&str>, rows: Vec<Vec<Cell>>) -> ResultTable {
        ResultTable {
            function: function.to_string(),
            columns: columns.into_iter().map(String::from).collect(),
            row_count: rows.len(),
            rows,
            elapsed: Duration::ZERO,
        }
    }

    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// The registered catalog. Immutable after construction.
pub struct QueryLibrary {
    functions: Vec<LinkingFunction>,
}

impl QueryLibrary {
    /// The standard three-function catalog over market and fundamental data.
    pub fn standard() -> QueryLibrary {
        QueryLibrary::register(vec![
            LinkingFunction {
                name: GET_STOCK_PRICE.into(),
                description: "Retrieve daily stock price bars (OHLCV) for one company, either \
                              the most recent lookback window (count plus unit) or an explicit \
                              inclusive date range, optionally resampled to weekly, monthly, or \
                              yearly bars."
                    .into(),
                template_id: "price_window".into(),
            },
            LinkingFunction {
                name: GET_FUNDAMENTAL_METRIC.into(),
                description: "Retrieve the most recent N values of one fundamental metric \
                              (revenue, net income, total assets, ...) for one company at \
                              quarterly or yearly frequency."
                    .into(),
                template_id: "fundamental_window".into(),
            },
            LinkingFunction {
                name: GET_FINANCIAL_STATEMENT.into(),
                description: "Retrieve a financial statement (income statement, balance sheet, \
                              or cash flow statement) for one company over the last N periods \
                              or an explicit fiscal-period range."
                    .into(),
                template_id: "statement_rows".into(),
            },
        ])
        .expect("standard catalog is valid")
    }

    /// Register a catalog, rejecting duplicate names and unknown templates.
    pub fn register(functions: Vec<LinkingFunction>) -> Result<QueryLibrary, RegistrationError> {
        let registry = TemplateRegistry::bundled();
        let mut seen = BTreeMap::new();
        for f in &functions {
            if seen.insert(f.name.clone(), ()).is_some() {
                return Err(RegistrationError::DuplicateName(f.name.clone()));
            }
            if registry.get(&f.template_id).is_none() {
                return Err(RegistrationError::UnknownTemplate {
                    name: f.name.clone(),
                    template: f.template_id.clone(),
                });
            }
        }
        Ok(QueryLibrary { functions })
    }

    /// The registered linking functions, in registration order.
    pub fn catalog(&self) -> &[LinkingFunction] {
        &self.functions
    }

    pub fn get(&self, name: &str) -> Option<&LinkingFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Validate, coerce, and default a raw argument document. Pure: no
    /// store access; entity resolution happens at execution time.
    pub fn validate_args(
        &self,
        function: &str,
        raw: &Value,
    ) -> Result<ValidatedArgs, ValidationError> {
        if self.get(function).is_none() {
            return Err(ValidationError::UnknownFunction(function.to_string()));
        }
        let raw = raw
            .as_object()
            .ok_or_else(|| ValidationError::invalid("arguments", "must be a JSON object"))?;
        let args = match function {
            GET_STOCK_PRICE => validate_stock_price(raw)?,
            GET_FUNDAMENTAL_METRIC => validate_fundamental_metric(raw)?,
            GET_FINANCIAL_STATEMENT => validate_financial_statement(raw)?,
            _ => unreachable!("registered functions are exhaustive"),
        };
        Ok(ValidatedArgs {
            function: function.to_string(),
            args,
        })
    }

    /// Execute a validated argument set against the store.
    pub fn execute(&self, args: &ValidatedArgs, store: &Store) -> Result<ResultTable, StoreError> {
        let started = Instant::now();
        let mut table = match args.function.as_str() {
            GET_STOCK_PRICE => execute_stock_price(args, store)?,
            GET_FUNDAMENTAL_METRIC => execute_fundamental_metric(args, store)?,
            GET_FINANCIAL_STATEMENT => execute_financial_statement(args, store)?,
            other => {
                return Err(StoreError::Precondition(format!(
                    "function `{other}` is not registered"
                )))
            }
        };
        table.elapsed = started.elapsed();
        Ok(table)
    }

    /// Machine-readable schemas for the chat-completions `tools` field.
    pub fn to_tool_specs(&self) -> Vec<ToolSpec> {
        self.functions
            .iter()
            .map(|f| ToolSpec {
                name: f.name.clone(),
                description: f.description.clone(),
                parameters: parameter_schema(&f.name),
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

fn get_string(raw: &Map<String, Value>, name: &str) -> Result<Option<String>, ValidationError> {
    match raw.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) if s.trim().is_empty() => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.trim().to_string())),
        Some(other) => Err(ValidationError::invalid(
            name,
            format!("expected a string, got {other}"),
        )),
    }
}

fn get_positive_int(raw: &Map<String, Value>, name: &str) -> Result<Option<i64>, ValidationError> {
    let value = match raw.get(name) {
        None | Some(Value::Null) => return Ok(None),
        Some(Value::Number(n)) => n
            .as_i64()
            .ok_or_else(|| ValidationError::invalid(name, "must be an integer"))?,
        // Models sometimes emit numbers as strings; coerce.
        Some(Value::String(s)) => s
            .trim()
            .parse::<i64>()
            .map_err(|_| ValidationError::invalid(name, "must be an integer"))?,
        Some(other) => {
            return Err(ValidationError::invalid(
                name,
                format!("expected an integer, got {other}"),
            ))
        }
    };
    if value < 1 {
        return Err(ValidationError::invalid(name, "must be >= 1"));
    }
    Ok(Some(value))
}

fn get_date(raw: &Map<String, Value>, name: &str) -> Result<Option<NaiveDate>, ValidationError> {
    match get_string(raw, name)? {
        None => Ok(None),
        Some(s) => NaiveDate::from_str(&s)
            .map(Some)
            .map_err(|_| ValidationError::invalid(name, "must be an ISO-8601 date (YYYY-MM-DD)")),
    }
}

fn require_entity(raw: &Map<String, Value>) -> Result<String, ValidationError> {
    // Accept either `ticker` or `company`; both hold a symbol or a name.
    match get_string(raw, "ticker")? {
        Some(t) => Ok(t),
        None => get_string(raw, "company")?
            .ok_or_else(|| ValidationError::MissingParameter("ticker".into())),
    }
}

fn validate_stock_price(raw: &Map<String, Value>) -> Result<Map<String, Value>, ValidationError> {
    let entity = require_entity(raw)?;
    let n = get_positive_int(raw, "n")?;
    let unit = match get_string(raw, "unit")? {
        None => None,
        Some(u) => Some(normalize_unit(&u).ok_or_else(|| {
            ValidationError::invalid("unit", "must be one of days, weeks, months, years")
        })?),
    };
    let start = get_date(raw, "start_date")?;
    let end = get_date(raw, "end_date")?;
    let periodicity = match get_string(raw, "periodicity")? {
        None => Periodicity::Daily,
        Some(p) => {
            Periodicity::from_str(&p).map_err(|e| ValidationError::invalid("periodicity", e))?
        }
    };

    let has_lookback = n.is_some();
    let has_range = start.is_some() || end.is_some();
    if has_lookback && has_range {
        return Err(ValidationError::invalid(
            "n",
            "lookback and explicit date range are mutually exclusive",
        ));
    }
    if !has_lookback && !has_range {
        return Err(ValidationError::MissingParameter("n".into()));
    }
    if has_range {
        let (start, end) = match (start, end) {
            (Some(s), Some(e)) => (s, e),
            (None, _) => return Err(ValidationError::MissingParameter("start_date".into())),
            (_, None) => return Err(ValidationError::MissingParameter("end_date".into())),
        };
        if start > end {
            return Err(ValidationError::invalid(
                "start_date",
                "start_date is after end_date",
            ));
        }
        let mut out = Map::new();
        out.insert("ticker".into(), json!(entity));
        out.insert("start_date".into(), json!(start.to_string()));
        out.insert("end_date".into(), json!(end.to_string()));
        out.insert("periodicity".into(), json!(periodicity.to_string()));
        return Ok(out);
    }

    let mut out = Map::new();
    out.insert("ticker".into(), json!(entity));
    out.insert("n".into(), json!(n.unwrap()));
    out.insert("unit".into(), json!(unit.unwrap_or("days")));
    out.insert("periodicity".into(), json!(periodicity.to_string()));
    Ok(out)
}

fn validate_fundamental_metric(
    raw: &Map<String, Value>,
) -> Result<Map<String, Value>, ValidationError> {
    let entity = require_entity(raw)?;
    let metric_raw = get_string(raw, "metric")?
        .ok_or_else(|| ValidationError::MissingParameter("metric".into()))?;
    let metric = Vocabulary::get()
        .resolve_phrase(&metric_raw)
        .ok_or_else(|| {
            ValidationError::invalid("metric", format!("`{metric_raw}` is not in the vocabulary"))
        })?;
    let n_periods = get_positive_int(raw, "n_periods")?.unwrap_or(1);
    let frequency = match get_string(raw, "frequency")? {
        None => Frequency::Quarterly,
        Some(f) => Frequency::from_str(&f).map_err(|e| ValidationError::invalid("frequency", e))?,
    };

    let mut out = Map::new();
    out.insert("ticker".into(), json!(entity));
    out.insert("metric".into(), json!(metric.id));
    out.insert("n_periods".into(), json!(n_periods));
    out.insert("frequency".into(), json!(frequency.to_string()));
    Ok(out)
}

fn parse_period_arg(name: &str, s: &str) -> Result<FiscalPeriod, ValidationError> {
    // Bare years ("2020") mean full fiscal years.
    let trimmed = s.trim();
    if trimmed.len() == 4 && trimmed.chars().all(|c| c.is_ascii_digit()) {
        let year: i32 = trimmed.parse().unwrap();
        return Ok(FiscalPeriod::full_year(year));
    }
    FiscalPeriod::from_str(trimmed).map_err(|e| ValidationError::invalid(name, e))
}

fn validate_financial_statement(
    raw: &Map<String, Value>,
) -> Result<Map<String, Value>, ValidationError> {
    let entity = require_entity(raw)?;
    let kind_raw = get_string(raw, "statement_kind")?
        .ok_or_else(|| ValidationError::MissingParameter("statement_kind".into()))?;
    let kind = StatementKind::from_str(&kind_raw)
        .map_err(|e| ValidationError::invalid("statement_kind", e))?;

    let last_n = get_positive_int(raw, "last_n")?;
    let start_period = get_string(raw, "start_period")?;
    let end_period = get_string(raw, "end_period")?;

    let mut out = Map::new();
    out.insert("ticker".into(), json!(entity));
    out.insert("statement_kind".into(), json!(kind.to_string()));

    if start_period.is_some() || end_period.is_some() {
        if last_n.is_some() {
            return Err(ValidationError::invalid(
                "last_n",
                "last_n and an explicit period range are mutually exclusive",
            ));
        }
        let start =
            start_period.ok_or_else(|| ValidationError::MissingParameter("start_period".into()))?;
        let end =
            end_period.ok_or_else(|| ValidationError::MissingParameter("end_period".into()))?;
        let start = parse_period_arg("start_period", &start)?;
        let end = parse_period_arg("end_period", &end)?;
        if start.frequency() != end.frequency() {
            return Err(ValidationError::invalid(
                "end_period",
                "start_period and end_period must share a frequency",
            ));
        }
        if start > end {
            return Err(ValidationError::invalid(
                "start_period",
                "start_period is after end_period",
            ));
        }
        out.insert("start_period".into(), json!(start.to_string()));
        out.insert("end_period".into(), json!(end.to_string()));
        return Ok(out);
    }

    let frequency = match get_string(raw, "frequency")? {
        None => Frequency::Quarterly,
        Some(f) => Frequency::from_str(&f).map_err(|e| ValidationError::invalid("frequency", e))?,
    };
    out.insert("last_n".into(), json!(last_n.unwrap_or(1)));
    out.insert("frequency".into(), json!(frequency.to_string()));
    Ok(out)
}

fn normalize_unit(raw: &str) -> Option<&'static str> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "day" | "days" => Some("days"),
        "week" | "weeks" => Some("weeks"),
        "month" | "months" => Some("months"),
        "year" | "years" => Some("years"),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

fn arg_str<'a>(args: &'a ValidatedArgs, name: &str) -> &'a str {
    args.args
        .get(name)
        .and_then(Value::as_str)
        .expect("validated args carry the field")
}

fn arg_int(args: &ValidatedArgs, name: &str) -> i64 {
    args.args
        .get(name)
        .and_then(Value::as_i64)
        .expect("validated args carry the field")
}

/// Inclusive calendar window covering exactly `n` units and ending at the
/// entity's latest trading day.
pub fn lookback_window(
    store: &Store,
    ticker: &str,
    n: u32,
    unit: &str,
) -> Result<(NaiveDate, NaiveDate), StoreError> {
    let end = store.latest_trading_date(ticker, None)?;
    let start = match unit {
        "weeks" => end - chrono::Duration::weeks(n as i64),
        "months" => end
            .checked_sub_months(Months::new(n))
            .ok_or_else(|| StoreError::Precondition("lookback window underflow".into()))?,
        "years" => end
            .checked_sub_months(Months::new(12 * n))
            .ok_or_else(|| StoreError::Precondition("lookback window underflow".into()))?,
        other => {
            return Err(StoreError::Precondition(format!(
                "unsupported lookback unit `{other}`"
            )))
        }
    };
    // Half-open on the left: the window covers exactly n units.
    Ok((start + chrono::Duration::days(1), end))
}

/// Resolve a ticker-or-company-name argument to a known ticker.
pub fn resolve_entity(store: &Store, entity: &str) -> Result<String, StoreError> {
    resolver::resolve_entity(store, entity)
}

fn execute_stock_price(args: &ValidatedArgs, store: &Store) -> Result<ResultTable, StoreError> {
    let ticker = resolve_entity(store, arg_str(args, "ticker"))?;
    let periodicity =
        Periodicity::from_str(arg_str(args, "periodicity")).expect("validated periodicity parses");

    let bars = if args.args.contains_key("n") {
        let n = arg_int(args, "n") as usize;
        let unit = arg_str(args, "unit");
        if unit == "days" {
            if periodicity == Periodicity::Daily {
                store.last_n_trading_days(&ticker, n, None)?
            } else {
                // Resampling over a day-count lookback still means "the last
                // n trading days", then bucketed.
                let daily = store.last_n_trading_days(&ticker, n, None)?;
                let start = daily.first().expect("n >= 1").date;
                let end = daily.last().expect("n >= 1").date;
                store.price_range(&ticker, start, end, periodicity)?
            }
        } else {
            let (start, end) = lookback_window(store, &ticker, n as u32, unit)?;
            store.price_range(&ticker, start, end, periodicity)?
        }
    } else {
        let start = NaiveDate::from_str(arg_str(args, "start_date")).expect("validated date");
        let end = NaiveDate::from_str(arg_str(args, "end_date")).expect("validated date");
        store.price_range(&ticker, start, end, periodicity)?
    };

    let rows = bars
        .iter()
        .map(|b| {
            vec![
                Cell::Text(b.ticker.clone()),
                Cell::Text(b.date.to_string()),
                Cell::Dec(b.open),
                Cell::Dec(b.high),
                Cell::Dec(b.low),
                Cell::Dec(b.close),
                Cell::Dec(b.adj_close),
                Cell::Int(b.volume as i64),
            ]
        })
        .collect();
    Ok(ResultTable::new(
        GET_STOCK_PRICE,
        vec![
            "ticker",
            "date",
            "open",
            "high",
            "low",
            "close",
            "adj_close",
            "volume",
        ],
        rows,
    ))
}

fn execute_fundamental_metric(
    args: &ValidatedArgs,
    store: &Store,
) -> Result<ResultTable, StoreError> {
    let ticker = resolve_entity(store, arg_str(args, "ticker"))?;
    let metric = arg_str(args, "metric");
    let n = arg_int(args, "n_periods") as usize;
    let frequency =
        Frequency::from_str(arg_str(args, "frequency")).expect("validated frequency parses");

    let records = store.fundamental_series(&ticker, metric, n, frequency)?;
    let rows = records
        .iter()
        .map(|r| {
            vec![
                Cell::Text(r.ticker.clone()),
                Cell::Text(r.fiscal_period.to_string()),
                Cell::Text(r.period_end_date.to_string()),
                Cell::Text(r.metric.clone()),
                Cell::Dec(r.value),
                Cell::Text(r.unit.clone()),
            ]
        })
        .collect();
    Ok(ResultTable::new(
        GET_FUNDAMENTAL_METRIC,
        vec![
            "ticker",
            "fiscal_period",
            "period_end_date",
            "metric",
            "value",
            "unit",
        ],
        rows,
    ))
}

fn execute_financial_statement(
    args: &ValidatedArgs,
    store: &Store,
) -> Result<ResultTable, StoreError> {
    let ticker = resolve_entity(store, arg_str(args, "ticker"))?;
    let kind = StatementKind::from_str(arg_str(args, "statement_kind"))
        .expect("validated statement kind parses");
    let selector = if args.args.contains_key("start_period") {
        let start =
            FiscalPeriod::from_str(arg_str(args, "start_period")).expect("validated period parses");
        let end =
            FiscalPeriod::from_str(arg_str(args, "end_period")).expect("validated period parses");
        PeriodSelector::Range(start, end)
    } else {
        let n = arg_int(args, "last_n") as usize;
        match Frequency::from_str(arg_str(args, "frequency")).expect("validated frequency") {
            Frequency::Quarterly => PeriodSelector::LastQuarters(n),
            Frequency::Yearly => PeriodSelector::LastYears(n),
        }
    };

    let bundle = store.statement(&ticker, kind, &selector)?;
    Ok(statement_table(&bundle))
}

/// Serialize a statement bundle as a table: one row per line item, one
/// column per period.
pub fn statement_table(bundle: &StatementBundle) -> ResultTable {
    let mut columns: Vec<String> = vec![
        "ticker".into(),
        "statement_kind".into(),
        "metric".into(),
        "unit".into(),
    ];
    columns.extend(bundle.periods.iter().map(|p| p.to_string()));
    let rows = bundle
        .line_items
        .iter()
        .map(|item| {
            let mut row = vec![
                Cell::Text(bundle.ticker.clone()),
                Cell::Text(bundle.statement_kind.to_string()),
                Cell::Text(item.metric.clone()),
                Cell::Text(item.unit.clone()),
            ];
            row.extend(item.values.iter().map(|v| match v {
                Some(d) => Cell::Dec(*d),
                None => Cell::Null,
            }));
            row
        })
        .collect();
    ResultTable {
        function: GET_FINANCIAL_STATEMENT.to_string(),
        columns,
        row_count: bundle.line_items.len(),
        rows,
        elapsed: Duration::ZERO,
    }
}

// ---------------------------------------------------------------------------
// Tool schemas
// ---------------------------------------------------------------------------

fn parameter_schema(function: &str) -> Value {
    match function {
        GET_STOCK_PRICE => json!({
            "type": "object",
            "properties": {
                "ticker": {
                    "type": "string",
                    "description": "Ticker symbol or company name, e.g. NVDA or NVIDIA."
                },
                "n": {
                    "type": "integer",
                    "minimum": 1,
                    "description": "Lookback count, combined with `unit`."
                },
                "unit": {
                    "type": "string",
                    "enum": ["days", "weeks", "months", "years"],
                    "description": "Lookback unit; defaults to days."
                },
                "start_date": { "type": "string", "format": "date" },
                "end_date": { "type": "string", "format": "date" },
                "periodicity": {
                    "type": "string",
                    "enum": ["daily", "weekly", "monthly", "yearly"],
                    "description": "Bar sampling; defaults to daily."
                }
            },
            "required": ["ticker"],
            "oneOf": [
                { "required": ["n"] },
                { "required": ["start_date", "end_date"] }
            ]
        }),
        GET_FUNDAMENTAL_METRIC => json!({
            "type": "object",
            "properties": {
                "ticker": {
                    "type": "string",
                    "description": "Ticker symbol or company name."
                },
                "metric": {
                    "type": "string",
                    "description": "Fundamental metric, e.g. revenue, net income, total assets."
                },
                "n_periods": {
                    "type": "integer",
                    "minimum": 1,
                    "description": "How many periods, most recent first; defaults to 1."
                },
                "frequency": {
                    "type": "string",
                    "enum": ["quarterly", "yearly"],
                    "description": "Reporting frequency; defaults to quarterly."
                }
            },
            "required": ["ticker", "metric"]
        }),
        GET_FINANCIAL_STATEMENT => json!({
            "type": "object",
            "properties": {
                "ticker": {
                    "type": "string",
                    "description": "Ticker symbol or company name."
                },
                "statement_kind": {
                    "type": "string",
                    "enum": ["income_statement", "balance_sheet", "cash_flow"],
                    "description": "Which statement to return."
                },
                "last_n": {
                    "type": "integer",
                    "minimum": 1,
                    "description": "Most recent N periods; defaults to 1."
                },
                "frequency": {
                    "type": "string",
                    "enum": ["quarterly", "yearly"],
                    "description": "Period frequency for last_n; defaults to quarterly."
                },
                "start_period": {
                    "type": "string",
                    "description": "Range start as a fiscal period tag, e.g. 2023Q2 or 2020FY."
                },
                "end_period": {
                    "type": "string",
                    "description": "Range end as a fiscal period tag."
                }
            },
            "required": ["ticker", "statement_kind"]
        }),
        other => panic!("no schema for function `{other}`"),
    }
}
