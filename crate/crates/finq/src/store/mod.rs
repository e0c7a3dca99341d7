//! Embedded relational store for prices, fundamentals, and company identity.
//!
//! SQLite-backed. Ingestion happens in a single-writer phase; afterwards the
//! store is read through the vetted template registry only. Every statement
//! the read path executes is recorded in an execution log so tests can prove
//! nothing outside the registry ever ran.

mod ingest;
mod query;
mod types;

pub use query::PeriodSelector;
pub use types::Periodicity;
pub use types::{
    CompanyRecord, FundamentalRecord, IndexId, IndexMembership, IngestReport, LineItem, PriceBar,
    Rejection, StatementBundle,
};

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use rusqlite::types::Value as SqlValue;
use rusqlite::{Connection, OpenFlags};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::templates::TemplateRegistry;

/// Errors surfaced by store operations.
#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown ticker `{0}`")]
    UnknownTicker(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("insufficient data: requested {requested}, only {available} available")]
    InsufficientData { requested: usize, available: usize },
    #[error("no data in the requested range")]
    EmptyRange,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("sql error: {0}")]
    Sql(#[from] rusqlite::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One statement run through the template executor.
#[derive(Debug, Clone)]
pub struct ExecutedStatement {
    pub template_id: String,
    pub sql: String,
}

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS prices (
    ticker    TEXT NOT NULL,
    date      TEXT NOT NULL,
    open      TEXT NOT NULL,
    high      TEXT NOT NULL,
    low       TEXT NOT NULL,
    close     TEXT NOT NULL,
    adj_close TEXT NOT NULL,
    volume    INTEGER NOT NULL,
    PRIMARY KEY (ticker, date)
);
CREATE TABLE IF NOT EXISTS fundamentals (
    ticker          TEXT NOT NULL,
    fiscal_period   TEXT NOT NULL,
    period_end_date TEXT NOT NULL,
    metric          TEXT NOT NULL,
    value           TEXT NOT NULL,
    unit            TEXT NOT NULL,
    PRIMARY KEY (ticker, fiscal_period, metric)
);
CREATE TABLE IF NOT EXISTS companies (
    ticker TEXT PRIMARY KEY,
    name   TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS company_names (
    name_norm TEXT PRIMARY KEY,
    ticker    TEXT NOT NULL,
    display   TEXT NOT NULL,
    kind      TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS index_memberships (
    ticker       TEXT NOT NULL,
    index_id     TEXT NOT NULL,
    member_start TEXT NOT NULL,
    member_end   TEXT,
    PRIMARY KEY (ticker, index_id, member_start)
);
CREATE INDEX IF NOT EXISTS idx_fundamentals_lookup
    ON fundamentals (ticker, metric, period_end_date);
";

/// Handle to one store. Shareable across threads; reads serialize on an
/// internal lock.
pub struct Store {
    conn: Mutex<Connection>,
    path: Option<PathBuf>,
    exec_log: Arc<Mutex<Vec<ExecutedStatement>>>,
}

impl Store {
    /// Open (creating if needed) a file-backed store.
    pub fn open(path: impl AsRef<Path>) -> Result<Store, StoreError> {
        let conn = Connection::open(path.as_ref())?;
        Self::from_connection(conn, Some(path.as_ref().to_path_buf()))
    }

    /// Open an in-memory store (unit tests, scratch work).
    pub fn in_memory() -> Result<Store, StoreError> {
        Self::from_connection(Connection::open_in_memory()?, None)
    }

    fn from_connection(conn: Connection, path: Option<PathBuf>) -> Result<Store, StoreError> {
        conn.execute_batch(SCHEMA)?;
        Ok(Store {
            conn: Mutex::new(conn),
            path,
            exec_log: Arc::new(Mutex::new(Vec::new())),
        })
    }

    /// Path of the backing file, if file-backed.
    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// A second read-only connection to the same database file, for the
    /// text-to-SQL sandbox. In-memory stores have no file to share.
    pub fn open_readonly_sibling(&self) -> Result<Connection, StoreError> {
        let path = self.path.as_ref().ok_or_else(|| {
            StoreError::Precondition("read-only sibling requires a file-backed store".into())
        })?;
        let conn = Connection::open_with_flags(
            path,
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
        )?;
        Ok(conn)
    }

    pub(crate) fn lock(&self) -> MutexGuard<'_, Connection> {
        self.conn.lock().expect("store lock poisoned")
    }

    /// Run a registered template with named parameters, logging the
    /// execution. All read-path queries go through here.
    pub(crate) fn query_template<T>(
        &self,
        template_id: &str,
        params: &[(&str, SqlValue)],
        mut map: impl FnMut(&rusqlite::Row<'_>) -> rusqlite::Result<T>,
    ) -> Result<Vec<T>, StoreError> {
        let registry = TemplateRegistry::bundled();
        let template = registry
            .get(template_id)
            .unwrap_or_else(|| panic!("template `{template_id}` is not registered"));
        self.exec_log
            .lock()
            .expect("exec log lock poisoned")
            .push(ExecutedStatement {
                template_id: template_id.to_string(),
                sql: template.sql.clone(),
            });

        let conn = self.lock();
        let mut stmt = conn.prepare_cached(&template.sql)?;
        let named: Vec<(String, &dyn rusqlite::ToSql)> = params
            .iter()
            .map(|(name, value)| (format!(":{name}"), value as &dyn rusqlite::ToSql))
            .collect();
        let borrowed: Vec<(&str, &dyn rusqlite::ToSql)> = named
            .iter()
            .map(|(name, value)| (name.as_str(), *value))
            .collect();
        let mut rows = stmt.query(borrowed.as_slice())?;
        let mut out = Vec::new();
        while let Some(row) = rows.next()? {
            out.push(map(row)?);
        }
        Ok(out)
    }

    /// Statements executed through the template path so far.
    pub fn execution_log(&self) -> Vec<ExecutedStatement> {
        self.exec_log
            .lock()
            .expect("exec log lock poisoned")
            .clone()
    }

    pub fn execution_log_len(&self) -> usize {
        self.exec_log.lock().expect("exec log lock poisoned").len()
    }

    /// Deterministic content hash over every table, for write-impossibility
    /// checks. Maintenance path; not part of the query read path.
    pub fn content_hash(&self) -> Result<String, StoreError> {
        let conn = self.lock();
        let mut hasher = Sha256::new();
        for (table, order) in [
            ("prices", "ticker, date"),
            ("fundamentals", "ticker, fiscal_period, metric"),
            ("companies", "ticker"),
            ("company_names", "name_norm"),
            ("index_memberships", "ticker, index_id, member_start"),
        ] {
            hasher.update(table.as_bytes());
            let sql = format!("SELECT * FROM {table} ORDER BY {order}");
            let mut stmt = conn.prepare(&sql)?;
            let n_cols = stmt.column_count();
            let mut rows = stmt.query([])?;
            while let Some(row) = rows.next()? {
                for i in 0..n_cols {
                    let cell: SqlValue = row.get(i)?;
                    match cell {
                        SqlValue::Null => hasher.update(b"\x00N"),
                        SqlValue::Integer(v) => {
                            hasher.update(b"\x00I");
                            hasher.update(v.to_le_bytes());
                        }
                        SqlValue::Real(v) => {
                            hasher.update(b"\x00R");
                            hasher.update(v.to_le_bytes());
                        }
                        SqlValue::Text(s) => {
                            hasher.update(b"\x00T");
                            hasher.update(s.as_bytes());
                        }
                        SqlValue::Blob(b) => {
                            hasher.update(b"\x00B");
                            hasher.update(&b);
                        }
                    }
                }
                hasher.update(b"\x00\n");
            }
        }
        let digest = hasher.finalize();
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Static schema description used by the text-to-SQL baseline prompt.
    pub fn schema_description() -> &'static str {
        SCHEMA_DESCRIPTION
    }
}

const SCHEMA_DESCRIPTION: &str = "\
Table prices(ticker TEXT, date TEXT /* ISO-8601 */, open TEXT, high TEXT, low TEXT, close TEXT, adj_close TEXT, volume INTEGER). One row per ticker per trading day. Primary key (ticker, date).
Table fundamentals(ticker TEXT, fiscal_period TEXT /* e.g. 2023Q2 or 2023FY */, period_end_date TEXT /* ISO-8601 */, metric TEXT, value TEXT, unit TEXT). One row per ticker, fiscal period, and metric. Primary key (ticker, fiscal_period, metric).
Table companies(ticker TEXT PRIMARY KEY, name TEXT).
Table company_names(name_norm TEXT PRIMARY KEY, ticker TEXT, display TEXT, kind TEXT /* 'name' or 'alias' */).
Table index_memberships(ticker TEXT, index_id TEXT /* NASDAQ100 or SP500 */, member_start TEXT, member_end TEXT /* NULL = current */).";
