//! Benchmark suite handling: load the natural-language test queries, derive
//! the tool call a well-behaved model should emit, and compute each case's
//! oracle answer directly against the store.

use std::str::FromStr;
use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;
use serde_json::{json, Value};
use thiserror::Error;

use crate::library::{self, Cell, ResultTable};
use crate::period::{FiscalPeriod, Frequency};
use crate::protocol::{Matcher, ScriptEntry, ScriptedResponse};
use crate::resolver;
use crate::router::ExpectedResult;
use crate::store::{PeriodSelector, Periodicity, Store, StoreError};
use crate::vocab::{StatementKind, Vocabulary};

/// The bundled benchmark queries, one per line.
pub const BUNDLED_SUITE: &str = include_str!("../../data/rq3_appendix.txt");

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("line {0} did not match any known query shape: `{1}`")]
    Unparsed(usize, String),
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Store-level description of the correct answer for one case.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleQuery {
    PriceLastDays {
        n: usize,
        periodicity: Periodicity,
    },
    PriceLookback {
        n: u32,
        unit: &'static str,
        periodicity: Periodicity,
    },
    PriceRange {
        start: NaiveDate,
        end: NaiveDate,
    },
    Fundamental {
        metric_id: String,
        n: usize,
        frequency: Frequency,
    },
    Statement {
        kind: StatementKind,
        selector: PeriodSelector,
    },
}

/// One parsed benchmark case.
#[derive(Debug, Clone)]
pub struct CaseSpec {
    pub index: usize,
    pub question: String,
    /// Entity exactly as phrased (ticker or company name).
    pub entity: String,
    /// Linking function a correct router run should land on.
    pub function: String,
    /// Arguments a well-behaved model would emit.
    pub arguments: Value,
    pub oracle: OracleQuery,
}

fn re(pattern: &str, slot: &'static OnceLock<Regex>) -> &'static Regex {
    slot.get_or_init(|| Regex::new(pattern).expect("pattern compiles"))
}

macro_rules! pattern {
    ($name:ident, $pattern:expr) => {
        fn $name() -> &'static Regex {
            static SLOT: OnceLock<Regex> = OnceLock::new();
            re($pattern, &SLOT)
        }
    };
}

pattern!(
    price_range_re,
    r"^(?i)(?:return|show)\s+(.+?)'s\s+stock price\s+(?:between|from)\s+(\d{4}-\d{2}-\d{2})\s+(?:and|to)\s+(\d{4}-\d{2}-\d{2})\.?$"
);
pattern!(
    price_lookback_re,
    r"^(?i)(?:return|show)\s+(.+?)'s\s+(?:stock price|daily closing price|closing price)s?\s+for the past\s+(\d+)\s+(day|week|month|year)s?(?:\s+with\s+(daily|weekly|monthly|yearly)\s+periodicity)?\.?$"
);
pattern!(
    statement_the_re,
    r"^(?i)return the\s+(income statement|balance sheet|cash flow statement)\s+for\s+(.+?)\s+for the last\s+(\d+)\s+(quarter|year)s?\.?$"
);
pattern!(
    statement_quarter_range_re,
    r"^(?i)return\s+(.+?)'s\s+(income statement|balance sheet|cash flow statement)\s+(?:between|for|from)\s+(\d{4})\s*Q(\d)\s+(?:and|to)\s+(\d{4})\s*Q(\d)\.?$"
);
pattern!(
    statement_year_range_re,
    r"^(?i)return\s+(.+?)'s\s+(income statement|balance sheet|cash flow statement)\s+(?:between|for|from)\s+(\d{4})\s+(?:and|to)\s+(\d{4})\.?$"
);
pattern!(
    statement_last_re,
    r"^(?i)return\s+(.+?)'s\s+(income statement|balance sheet|cash flow statement)\s+for the (?:past|last)\s+(\d+)\s+(quarter|year)s?\.?$"
);
pattern!(
    fundamental_re,
    r"^(?i)return\s+(.+?)'s\s+(?:(quarterly|yearly)\s+)?(.+?)\s+for\s+(?:the\s+)?(?:past\s+|last\s+)?(\d+)\s+(quarter|year)s?\.?$"
);

fn normalize_apostrophes(s: &str) -> String {
    s.replace(['\u{2018}', '\u{2019}'], "'").trim().to_string()
}

fn statement_kind_of(label: &str) -> StatementKind {
    StatementKind::from_str(label).expect("matched labels parse")
}

/// Parse a whole suite file (one query per line, blank lines skipped).
pub fn parse_suite(text: &str) -> Result<Vec<CaseSpec>, SuiteError> {
    let mut cases = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        cases.push(parse_case(cases.len(), line_no, raw)?);
    }
    Ok(cases)
}

fn parse_case(index: usize, line_no: usize, raw: &str) -> Result<CaseSpec, SuiteError> {
    let question = raw.trim().to_string();
    let line = normalize_apostrophes(raw);

    if let Some(c) = price_range_re().captures(&line) {
        let entity = c[1].to_string();
        let start = NaiveDate::from_str(&c[2]).map_err(|e| SuiteError::Invalid {
            line: line_no,
            reason: e.to_string(),
        })?;
        let end = NaiveDate::from_str(&c[3]).map_err(|e| SuiteError::Invalid {
            line: line_no,
            reason: e.to_string(),
        })?;
        return Ok(CaseSpec {
            index,
            question,
            arguments: json!({
                "ticker": entity,
                "start_date": start.to_string(),
                "end_date": end.to_string(),
            }),
            entity,
            function: library::GET_STOCK_PRICE.into(),
            oracle: OracleQuery::PriceRange { start, end },
        });
    }

    if let Some(c) = price_lookback_re().captures(&line) {
        let entity = c[1].to_string();
        let n: u32 = c[2].parse().map_err(|_| SuiteError::Invalid {
            line: line_no,
            reason: "bad lookback count".into(),
        })?;
        let unit: &'static str = match c[3].to_ascii_lowercase().as_str() {
            "day" => "days",
            "week" => "weeks",
            "month" => "months",
            _ => "years",
        };
        let periodicity = c
            .get(4)
            .map(|m| Periodicity::from_str(m.as_str()).expect("matched periodicity parses"))
            .unwrap_or_default();
        let mut arguments = json!({
            "ticker": entity,
            "n": n,
            "unit": unit,
        });
        if let Some(m) = c.get(4) {
            arguments["periodicity"] = json!(m.as_str());
        }
        let oracle = if unit == "days" {
            OracleQuery::PriceLastDays {
                n: n as usize,
                periodicity,
            }
        } else {
            OracleQuery::PriceLookback {
                n,
                unit,
                periodicity,
            }
        };
        return Ok(CaseSpec {
            index,
            question,
            arguments,
            entity,
            function: library::GET_STOCK_PRICE.into(),
            oracle,
        });
    }

    let statement_last = statement_the_re()
        .captures(&line)
        .map(|c| {
            (
                c[2].to_string(),
                c[1].to_string(),
                c[3].to_string(),
                c[4].to_string(),
            )
        })
        .or_else(|| {
            statement_last_re().captures(&line).map(|c| {
                (
                    c[1].to_string(),
                    c[2].to_string(),
                    c[3].to_string(),
                    c[4].to_string(),
                )
            })
        });
    if let Some((entity, kind_label, n_str, unit)) = statement_last {
        let kind = statement_kind_of(&kind_label);
        let n: usize = n_str.parse().map_err(|_| SuiteError::Invalid {
            line: line_no,
            reason: "bad period count".into(),
        })?;
        let frequency = if unit.eq_ignore_ascii_case("year") {
            Frequency::Yearly
        } else {
            Frequency::Quarterly
        };
        let selector = match frequency {
            Frequency::Quarterly => PeriodSelector::LastQuarters(n),
            Frequency::Yearly => PeriodSelector::LastYears(n),
        };
        return Ok(CaseSpec {
            index,
            question,
            arguments: json!({
                "ticker": entity,
                "statement_kind": kind.to_string(),
                "last_n": n,
                "frequency": frequency.to_string(),
            }),
            entity,
            function: library::GET_FINANCIAL_STATEMENT.into(),
            oracle: OracleQuery::Statement { kind, selector },
        });
    }

    if let Some(c) = statement_quarter_range_re().captures(&line) {
        let entity = c[1].to_string();
        let kind = statement_kind_of(&c[2]);
        let parse_q = |y: &str, q: &str| -> Result<FiscalPeriod, SuiteError> {
            let year: i32 = y.parse().map_err(|_| SuiteError::Invalid {
                line: line_no,
                reason: "bad year".into(),
            })?;
            let quarter: u8 = q.parse().map_err(|_| SuiteError::Invalid {
                line: line_no,
                reason: "bad quarter".into(),
            })?;
            if !(1..=4).contains(&quarter) {
                return Err(SuiteError::Invalid {
                    line: line_no,
                    reason: "quarter out of range".into(),
                });
            }
            Ok(FiscalPeriod::quarter(year, quarter))
        };
        let start = parse_q(&c[3], &c[4])?;
        let end = parse_q(&c[5], &c[6])?;
        return Ok(CaseSpec {
            index,
            question,
            arguments: json!({
                "ticker": entity,
                "statement_kind": kind.to_string(),
                "start_period": start.to_string(),
                "end_period": end.to_string(),
            }),
            entity,
            function: library::GET_FINANCIAL_STATEMENT.into(),
            oracle: OracleQuery::Statement {
                kind,
                selector: PeriodSelector::Range(start, end),
            },
        });
    }

    if let Some(c) = statement_year_range_re().captures(&line) {
        let entity = c[1].to_string();
        let kind = statement_kind_of(&c[2]);
        let start = FiscalPeriod::full_year(c[3].parse().expect("matched year parses"));
        let end = FiscalPeriod::full_year(c[4].parse().expect("matched year parses"));
        return Ok(CaseSpec {
            index,
            question,
            arguments: json!({
                "ticker": entity,
                "statement_kind": kind.to_string(),
                "start_period": start.to_string(),
                "end_period": end.to_string(),
            }),
            entity,
            function: library::GET_FINANCIAL_STATEMENT.into(),
            oracle: OracleQuery::Statement {
                kind,
                selector: PeriodSelector::Range(start, end),
            },
        });
    }

    if let Some(c) = fundamental_re().captures(&line) {
        let entity = c[1].to_string();
        let freq_word = c.get(2).map(|m| m.as_str().to_ascii_lowercase());
        let metric_phrase = c[3].to_string();
        let n: usize = c[4].parse().map_err(|_| SuiteError::Invalid {
            line: line_no,
            reason: "bad period count".into(),
        })?;
        let unit = c[5].to_ascii_lowercase();
        let frequency = match freq_word.as_deref() {
            Some("yearly") => Frequency::Yearly,
            Some("quarterly") => Frequency::Quarterly,
            _ if unit == "year" => Frequency::Yearly,
            _ => Frequency::Quarterly,
        };
        let metric_id = Vocabulary::get()
            .resolve_phrase(&metric_phrase)
            .ok_or_else(|| SuiteError::Invalid {
                line: line_no,
                reason: format!("metric `{metric_phrase}` is not in the vocabulary"),
            })?
            .id
            .clone();
        return Ok(CaseSpec {
            index,
            question,
            arguments: json!({
                "ticker": entity,
                "metric": metric_phrase,
                "n_periods": n,
                "frequency": frequency.to_string(),
            }),
            entity,
            function: library::GET_FUNDAMENTAL_METRIC.into(),
            oracle: OracleQuery::Fundamental {
                metric_id,
                n,
                frequency,
            },
        });
    }

    Err(SuiteError::Unparsed(line_no, question))
}

/// Compute the oracle answer for one case directly against the store.
pub fn oracle_expected(store: &Store, case: &CaseSpec) -> Result<ExpectedResult, SuiteError> {
    let ticker = resolver::resolve_entity(store, &case.entity)?;
    let (table, key_columns) = match &case.oracle {
        OracleQuery::PriceLastDays { n, periodicity } => {
            let daily = store.last_n_trading_days(&ticker, *n, None)?;
            let bars = if *periodicity == Periodicity::Daily {
                daily
            } else {
                let start = daily.first().expect("n >= 1").date;
                let end = daily.last().expect("n >= 1").date;
                store.price_range(&ticker, start, end, *periodicity)?
            };
            (bar_table(&bars), vec!["date".into(), "close".into()])
        }
        OracleQuery::PriceLookback {
            n,
            unit,
            periodicity,
        } => {
            let (start, end) = library::lookback_window(store, &ticker, *n, unit)?;
            let bars = store.price_range(&ticker, start, end, *periodicity)?;
            (bar_table(&bars), vec!["date".into(), "close".into()])
        }
        OracleQuery::PriceRange { start, end } => {
            let bars = store.price_range(&ticker, *start, *end, Periodicity::Daily)?;
            (bar_table(&bars), vec!["date".into(), "close".into()])
        }
        OracleQuery::Fundamental {
            metric_id,
            n,
            frequency,
        } => {
            let records = store.fundamental_series(&ticker, metric_id, *n, *frequency)?;
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
            (
                ResultTable::new(
                    "oracle",
                    vec![
                        "ticker",
                        "fiscal_period",
                        "period_end_date",
                        "metric",
                        "value",
                        "unit",
                    ],
                    rows,
                ),
                vec!["fiscal_period".into(), "value".into()],
            )
        }
        OracleQuery::Statement { kind, selector } => {
            let bundle = store.statement(&ticker, *kind, selector)?;
            let table = library::statement_table(&bundle);
            let mut keys: Vec<String> = vec!["metric".into()];
            keys.extend(bundle.periods.iter().map(|p| p.to_string()));
            (table, keys)
        }
    };
    Ok(ExpectedResult {
        ticker,
        table,
        key_columns,
    })
}

fn bar_table(bars: &[crate::store::PriceBar]) -> ResultTable {
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
    ResultTable::new(
        "oracle",
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
    )
}

/// Script for the function-calling system: each question maps to its ideal
/// tool call, plus one follow-up entry that turns any tool result into a
/// short final answer. Scripted usages model a tokenizer at roughly four
/// characters per token over the user-visible text, so offline cost numbers
/// stay in a realistic range instead of charging for raw table dumps.
pub fn function_calling_script(cases: &[CaseSpec]) -> Vec<ScriptEntry> {
    let mut entries: Vec<ScriptEntry> = cases
        .iter()
        .map(|case| ScriptEntry {
            matcher: Matcher::Equals(case.question.clone()),
            respond: ScriptedResponse::ToolCall {
                name: case.function.clone(),
                arguments: case.arguments.to_string(),
            },
            usage: Some(crate::protocol::TokenUsage::new(
                260 + case.question.len() as u64 / 4,
                12 + case.arguments.to_string().len() as u64 / 4,
            )),
        })
        .collect();
    entries.push(ScriptEntry {
        matcher: Matcher::Contains("\"columns\"".into()),
        respond: ScriptedResponse::Text("Here are the requested values.".into()),
        usage: Some(crate::protocol::TokenUsage::new(430, 9)),
    });
    entries
}

/// Script for the text-to-SQL system: plausible generated SQL per question.
/// Simple retrievals come out correct; calendar-window and statement-shaped
/// cases come out as realistic near-misses.
pub fn text_to_sql_script(store: &Store, cases: &[CaseSpec]) -> Vec<ScriptEntry> {
    cases
        .iter()
        .map(|case| {
            let ticker = resolver::resolve_entity(store, &case.entity)
                .unwrap_or_else(|_| case.entity.to_ascii_uppercase());
            let sql = generated_sql(case, &ticker);
            // Schema prompt plus free-form SQL generation: noticeably more
            // tokens both ways than a routed call.
            let usage = crate::protocol::TokenUsage::new(
                520 + case.question.len() as u64 / 4,
                30 + sql.len() as u64 / 3,
            );
            ScriptEntry {
                matcher: Matcher::Contains(case.question.clone()),
                respond: ScriptedResponse::Text(format!("```sql\n{sql}\n```")),
                usage: Some(usage),
            }
        })
        .collect()
}

fn generated_sql(case: &CaseSpec, ticker: &str) -> String {
    match &case.oracle {
        OracleQuery::PriceLastDays { n, .. } => format!(
            "SELECT ticker, date, close FROM (SELECT * FROM prices WHERE ticker = '{ticker}' \
             ORDER BY date DESC LIMIT {n}) ORDER BY date"
        ),
        OracleQuery::PriceLookback { n, unit, .. } => {
            // Plain calendar arithmetic, no trading-day or resampling
            // awareness: close, but usually not exactly the oracle rows.
            let days = match *unit {
                "weeks" => n * 7,
                "months" => n * 30,
                _ => n * 365,
            };
            format!(
                "SELECT ticker, date, close FROM prices WHERE ticker = '{ticker}' AND date >= \
                 date((SELECT MAX(date) FROM prices WHERE ticker = '{ticker}'), '-{days} days') \
                 ORDER BY date"
            )
        }
        OracleQuery::PriceRange { start, end } => format!(
            "SELECT ticker, date, close FROM prices WHERE ticker = '{ticker}' \
             AND date BETWEEN '{start}' AND '{end}' ORDER BY date"
        ),
        OracleQuery::Fundamental {
            metric_id,
            n,
            frequency,
        } => format!(
            "SELECT ticker, fiscal_period, value FROM (SELECT * FROM fundamentals \
             WHERE ticker = '{ticker}' AND metric = '{metric_id}' AND substr(fiscal_period, 5, 1) = '{marker}' \
             ORDER BY period_end_date DESC LIMIT {n}) ORDER BY period_end_date",
            marker = frequency.marker(),
        ),
        OracleQuery::Statement { kind, .. } => format!(
            // Long format; the reference answer is the pivoted statement, so
            // this is counted as a miss.
            "SELECT ticker, fiscal_period, metric, value FROM fundamentals \
             WHERE ticker = '{ticker}' ORDER BY period_end_date, metric -- {kind}"
        ),
    }
}
