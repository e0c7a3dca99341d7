//! Text-to-SQL comparison system: schema-prompted SQL generation executed
//! in a hardened read-only sandbox.

use std::str::FromStr;
use std::time::{Duration, Instant};

use rust_decimal::Decimal;
use serde::Serialize;
use thiserror::Error;

use crate::library::{Cell, ResultTable};
use crate::store::{Store, StoreError};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("no SQL statement found in model output")]
    NoSqlFound,
    #[error("multiple SQL statements are not allowed")]
    MultipleStatements,
    #[error("sandbox violation: {0}")]
    SandboxViolation(String),
    #[error("statement exceeded the {0:?} sandbox timeout")]
    Timeout(Duration),
    #[error("sql error: {0}")]
    SqlError(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Execution guardrails for generated statements.
#[derive(Debug, Clone, Copy)]
pub struct SandboxLimits {
    pub max_rows: usize,
    pub timeout: Duration,
}

impl Default for SandboxLimits {
    fn default() -> Self {
        // Bound runaway generated queries without penalizing legitimate ones.
        SandboxLimits {
            max_rows: 10_000,
            timeout: Duration::from_secs(10),
        }
    }
}

/// Full record of one generation → sanitize → execute attempt.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratedSql {
    pub raw: String,
    pub statement: Option<String>,
    pub verdict: String,
    pub error: Option<String>,
    pub row_count: Option<usize>,
}

/// Deterministic schema prompt: tables, columns, types, and the question.
pub fn build_schema_prompt(schema: &str, question: &str) -> String {
    format!(
        "You translate questions about a financial database into SQLite SQL.\n\
         Database schema:\n{schema}\n\n\
         Write one single SELECT statement answering the question below. \
         Return only the SQL, with no explanation.\n\n\
         Question: {question}"
    )
}

/// Pull exactly one statement out of model output, stripping code fences.
pub fn extract_sql(text: &str) -> Result<String, BaselineError> {
    let candidate = match fenced_block(text) {
        Some(inner) => inner,
        None => text.trim().to_string(),
    };
    let candidate = candidate.trim();
    if candidate.is_empty() {
        return Err(BaselineError::NoSqlFound);
    }
    let statements: Vec<&str> = candidate
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    match statements.len() {
        0 => Err(BaselineError::NoSqlFound),
        1 => {
            let stmt = statements[0].to_string();
            let first = stmt
                .split_whitespace()
                .next()
                .unwrap_or_default()
                .to_ascii_uppercase();
            if first == "SELECT" || first == "WITH" {
                Ok(stmt)
            } else {
                Err(BaselineError::NoSqlFound)
            }
        }
        _ => Err(BaselineError::MultipleStatements),
    }
}

fn fenced_block(text: &str) -> Option<String> {
    let start = text.find("```")?;
    let after = &text[start + 3..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &after[body_start..];
    let end = body.find("```")?;
    Some(body[..end].trim().to_string())
}

const BANNED_KEYWORDS: [&str; 14] = [
    "INSERT", "UPDATE", "DELETE", "DROP", "ALTER", "ATTACH", "DETACH", "PRAGMA", "CREATE",
    "REPLACE", "TRUNCATE", "VACUUM", "REINDEX", "GRANT",
];

/// Pure text-level gate: single SELECT/CTE statement, no write keywords.
pub fn sanitize_statement(statement: &str) -> Result<(), BaselineError> {
    let trimmed = statement.trim().trim_end_matches(';').trim();
    if trimmed.is_empty() {
        return Err(BaselineError::SandboxViolation("empty statement".into()));
    }
    if trimmed.split(';').filter(|s| !s.trim().is_empty()).count() > 1 {
        return Err(BaselineError::SandboxViolation(
            "multiple statements".into(),
        ));
    }
    let first = trimmed
        .split_whitespace()
        .next()
        .unwrap_or_default()
        .to_ascii_uppercase();
    if first != "SELECT" && first != "WITH" {
        return Err(BaselineError::SandboxViolation(format!(
            "only SELECT statements may run (got `{first}`)"
        )));
    }
    // Conservative token scan; string literals containing these words are
    // rejected too, which only costs the baseline a case.
    let upper = trimmed.to_ascii_uppercase();
    for token in upper.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
        if BANNED_KEYWORDS.contains(&token) {
            return Err(BaselineError::SandboxViolation(format!(
                "banned keyword `{token}`"
            )));
        }
    }
    Ok(())
}

/// Execute one sanitized statement on a read-only connection with row and
/// wall-clock limits.
pub fn sandbox_execute(
    statement: &str,
    store: &Store,
    limits: SandboxLimits,
) -> Result<ResultTable, BaselineError> {
    sanitize_statement(statement)?;
    let conn = store.open_readonly_sibling()?;
    conn.pragma_update(None, "query_only", true)
        .map_err(|e| BaselineError::SqlError(e.to_string()))?;

    let deadline = Instant::now() + limits.timeout;
    conn.progress_handler(1_000, Some(move || Instant::now() > deadline))
        .map_err(|e| BaselineError::SqlError(e.to_string()))?;

    let started = Instant::now();
    let mut stmt = conn
        .prepare(statement)
        .map_err(|e| classify_sql_error(e, limits))?;
    let columns: Vec<String> = stmt.column_names().iter().map(|s| s.to_string()).collect();
    let n_cols = columns.len();

    let mut rows_out: Vec<Vec<Cell>> = Vec::new();
    let mut rows = stmt.query([]).map_err(|e| classify_sql_error(e, limits))?;
    loop {
        match rows.next() {
            Ok(Some(row)) => {
                if rows_out.len() >= limits.max_rows {
                    break;
                }
                let mut cells = Vec::with_capacity(n_cols);
                for i in 0..n_cols {
                    let value: rusqlite::types::Value = row
                        .get(i)
                        .map_err(|e| BaselineError::SqlError(e.to_string()))?;
                    cells.push(match value {
                        rusqlite::types::Value::Null => Cell::Null,
                        rusqlite::types::Value::Integer(v) => Cell::Int(v),
                        rusqlite::types::Value::Real(v) => Cell::Text(format!("{v}")),
                        rusqlite::types::Value::Text(s) => match Decimal::from_str(&s) {
                            // Stored numerics are TEXT; surface them as
                            // decimals so judging is route-independent.
                            Ok(d) if looks_numeric(&s) => Cell::Dec(d),
                            _ => Cell::Text(s),
                        },
                        rusqlite::types::Value::Blob(_) => Cell::Text("<blob>".into()),
                    });
                }
                rows_out.push(cells);
            }
            Ok(None) => break,
            Err(e) => return Err(classify_sql_error(e, limits)),
        }
    }

    let mut table = ResultTable {
        function: "text_to_sql".to_string(),
        columns,
        row_count: rows_out.len(),
        rows: rows_out,
        elapsed: started.elapsed(),
    };
    // SQLite reports generated column names like `close`; keep them as-is.
    table.row_count = table.rows.len();
    Ok(table)
}

fn looks_numeric(s: &str) -> bool {
    let s = s.trim();
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_digit() || c == '.' || c == '-' || c == '+')
}

fn classify_sql_error(e: rusqlite::Error, limits: SandboxLimits) -> BaselineError {
    if let rusqlite::Error::SqliteFailure(err, _) = &e {
        if err.code == rusqlite::ErrorCode::OperationInterrupted {
            return BaselineError::Timeout(limits.timeout);
        }
        if err.code == rusqlite::ErrorCode::ReadOnly {
            return BaselineError::SandboxViolation("write attempted on read-only store".into());
        }
    }
    BaselineError::SqlError(e.to_string())
}
