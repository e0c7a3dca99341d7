//! CSV ingestion: the single-writer phase of the store lifecycle.
//!
//! Every data row is either persisted or rejected with a reason; report
//! totals always equal the input row count. Rows land through prepared
//! INSERTs with bound parameters.

use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDate;
use rusqlite::params;
use rust_decimal::Decimal;

use super::types::{IndexId, IndexMembership, IngestReport, PriceBar};
use super::{Store, StoreError};
use crate::period::FiscalPeriod;
use crate::vocab::{normalize_phrase, Vocabulary};

const PRICES_HEADER: [&str; 8] = [
    "ticker",
    "date",
    "open",
    "high",
    "low",
    "close",
    "adj_close",
    "volume",
];
const FUNDAMENTALS_HEADER: [&str; 6] = [
    "ticker",
    "fiscal_period",
    "period_end_date",
    "metric",
    "value",
    "unit",
];
const COMPANIES_HEADER: [&str; 4] = ["ticker", "name", "aliases", "index_memberships"];

/// Period end dates may drift from calendar quarter ends for off-calendar
/// fiscal years, but not by more than about a quarter.
const PERIOD_END_SLACK_DAYS: i64 = 120;

impl Store {
    /// Load price bars from a CSV stream with the documented header.
    pub fn ingest_prices(&self, source: impl Read) -> Result<IngestReport, StoreError> {
        let mut reader = csv::Reader::from_reader(source);
        check_header(&mut reader, &PRICES_HEADER)?;

        let mut report = IngestReport::default();
        let conn = self.lock();
        let tx = conn.unchecked_transaction()?;
        let mut insert = conn.prepare(
            "INSERT INTO prices (ticker, date, open, high, low, close, adj_close, volume)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
        )?;

        for (idx, record) in reader.records().enumerate() {
            let row_no = idx + 1;
            let record = record?;
            let bar = match parse_price_row(&record) {
                Ok(bar) => bar,
                Err(reason) => {
                    report.reject(row_no, reason);
                    continue;
                }
            };
            if !bar.ohlc_ordered() {
                report.reject(row_no, "ohlc-order");
                continue;
            }
            let inserted = insert.execute(params![
                bar.ticker,
                bar.date.to_string(),
                bar.open.to_string(),
                bar.high.to_string(),
                bar.low.to_string(),
                bar.close.to_string(),
                bar.adj_close.to_string(),
                bar.volume as i64,
            ]);
            match inserted {
                Ok(_) => report.loaded += 1,
                Err(e) if is_unique_violation(&e) => report.reject(row_no, "duplicate"),
                Err(e) => return Err(e.into()),
            }
        }
        drop(insert);
        tx.commit()?;
        Ok(report)
    }

    /// Load fundamentals from a CSV stream; metric ids must be in the
    /// closed vocabulary.
    pub fn ingest_fundamentals(&self, source: impl Read) -> Result<IngestReport, StoreError> {
        let mut reader = csv::Reader::from_reader(source);
        check_header(&mut reader, &FUNDAMENTALS_HEADER)?;

        let vocab = Vocabulary::get();
        let mut report = IngestReport::default();
        let conn = self.lock();
        let tx = conn.unchecked_transaction()?;
        let mut insert = conn.prepare(
            "INSERT INTO fundamentals (ticker, fiscal_period, period_end_date, metric, value, unit)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
        )?;

        for (idx, record) in reader.records().enumerate() {
            let row_no = idx + 1;
            let record = record?;
            let ticker = match parse_ticker(record.get(0).unwrap_or_default()) {
                Ok(t) => t,
                Err(reason) => {
                    report.reject(row_no, reason);
                    continue;
                }
            };
            let period = match FiscalPeriod::from_str(record.get(1).unwrap_or_default()) {
                Ok(p) => p,
                Err(_) => {
                    report.reject(row_no, "bad-fiscal-period");
                    continue;
                }
            };
            let end_date = match NaiveDate::from_str(record.get(2).unwrap_or_default().trim()) {
                Ok(d) => d,
                Err(_) => {
                    report.reject(row_no, "bad-date");
                    continue;
                }
            };
            let slack = (end_date - period.end_date()).num_days().abs();
            if slack > PERIOD_END_SLACK_DAYS {
                report.reject(row_no, "period-date-mismatch");
                continue;
            }
            let metric = record.get(3).unwrap_or_default().trim();
            if vocab.by_id(metric).is_none() {
                report.reject(row_no, "unknown-metric");
                continue;
            }
            let value = match Decimal::from_str(record.get(4).unwrap_or_default().trim()) {
                Ok(v) => v,
                Err(_) => {
                    report.reject(row_no, "bad-number");
                    continue;
                }
            };
            let unit = record.get(5).unwrap_or_default().trim();

            let inserted = insert.execute(params![
                ticker,
                period.to_string(),
                end_date.to_string(),
                metric,
                value.to_string(),
                unit,
            ]);
            match inserted {
                Ok(_) => report.loaded += 1,
                Err(e) if is_unique_violation(&e) => report.reject(row_no, "duplicate"),
                Err(e) => return Err(e.into()),
            }
        }
        drop(insert);
        tx.commit()?;
        Ok(report)
    }

    /// Load the company registry: names, pipe-separated aliases, and
    /// `INDEX:start:end` membership intervals separated by semicolons.
    pub fn ingest_companies(&self, source: impl Read) -> Result<IngestReport, StoreError> {
        let mut reader = csv::Reader::from_reader(source);
        check_header(&mut reader, &COMPANIES_HEADER)?;

        let mut report = IngestReport::default();
        let conn = self.lock();
        let tx = conn.unchecked_transaction()?;
        let mut insert_company =
            conn.prepare("INSERT INTO companies (ticker, name) VALUES (?1, ?2)")?;
        let mut insert_name = conn.prepare(
            "INSERT INTO company_names (name_norm, ticker, display, kind) VALUES (?1, ?2, ?3, ?4)",
        )?;
        let mut insert_membership = conn.prepare(
            "INSERT INTO index_memberships (ticker, index_id, member_start, member_end)
             VALUES (?1, ?2, ?3, ?4)",
        )?;

        'rows: for (idx, record) in reader.records().enumerate() {
            let row_no = idx + 1;
            let record = record?;
            let ticker = match parse_ticker(record.get(0).unwrap_or_default()) {
                Ok(t) => t,
                Err(reason) => {
                    report.reject(row_no, reason);
                    continue;
                }
            };
            let name = record.get(1).unwrap_or_default().trim().to_string();
            if name.is_empty() {
                report.reject(row_no, "missing-name");
                continue;
            }
            let aliases: Vec<String> = record
                .get(2)
                .unwrap_or_default()
                .split('|')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();

            let mut memberships: Vec<IndexMembership> = Vec::new();
            for chunk in record
                .get(3)
                .unwrap_or_default()
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
            {
                let membership = match parse_membership(chunk) {
                    Ok(m) => m,
                    Err(reason) => {
                        report.reject(row_no, reason);
                        continue 'rows;
                    }
                };
                if memberships.iter().any(|m| m.overlaps(&membership)) {
                    report.reject(row_no, "overlapping-membership");
                    continue 'rows;
                }
                memberships.push(membership);
            }

            // All-or-nothing per company row. Aliases that normalize to the
            // same key as the name (or each other) collapse to one entry.
            let mut name_keys = vec![normalize_phrase(&name)];
            let tx_result = (|| -> rusqlite::Result<()> {
                insert_company.execute(params![ticker, name])?;
                insert_name.execute(params![name_keys[0], ticker, name, "name"])?;
                for alias in &aliases {
                    let key = normalize_phrase(alias);
                    if name_keys.contains(&key) {
                        continue;
                    }
                    insert_name.execute(params![key, ticker, alias, "alias"])?;
                    name_keys.push(key);
                }
                for m in &memberships {
                    insert_membership.execute(params![
                        ticker,
                        m.index_id.to_string(),
                        m.start.to_string(),
                        m.end.map(|d| d.to_string()),
                    ])?;
                }
                Ok(())
            })();
            match tx_result {
                Ok(()) => report.loaded += 1,
                Err(e) if is_unique_violation(&e) => {
                    // Partial inserts from this row are purged.
                    conn.execute("DELETE FROM companies WHERE ticker = ?1", params![ticker])?;
                    conn.execute(
                        "DELETE FROM company_names WHERE ticker = ?1",
                        params![ticker],
                    )?;
                    conn.execute(
                        "DELETE FROM index_memberships WHERE ticker = ?1",
                        params![ticker],
                    )?;
                    report.reject(row_no, "duplicate");
                }
                Err(e) => return Err(e.into()),
            }
        }
        drop(insert_company);
        drop(insert_name);
        drop(insert_membership);
        tx.commit()?;
        Ok(report)
    }
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), StoreError> {
    let headers = reader.headers()?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(StoreError::Precondition(format!(
            "unexpected CSV header: expected `{}`, got `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn parse_price_row(record: &csv::StringRecord) -> Result<PriceBar, String> {
    let ticker = parse_ticker(record.get(0).unwrap_or_default())?;
    let date = NaiveDate::from_str(record.get(1).unwrap_or_default().trim())
        .map_err(|_| "bad-date".to_string())?;
    let number = |i: usize, what: &str| -> Result<Decimal, String> {
        Decimal::from_str(record.get(i).unwrap_or_default().trim())
            .map_err(|_| format!("bad-number:{what}"))
    };
    let volume: u64 = record
        .get(7)
        .unwrap_or_default()
        .trim()
        .parse()
        .map_err(|_| "bad-volume".to_string())?;
    Ok(PriceBar {
        ticker,
        date,
        open: number(2, "open")?,
        high: number(3, "high")?,
        low: number(4, "low")?,
        close: number(5, "close")?,
        adj_close: number(6, "adj_close")?,
        volume,
    })
}

fn parse_ticker(raw: &str) -> Result<String, String> {
    let ticker = raw.trim().to_ascii_uppercase();
    if ticker.is_empty() {
        return Err("missing-ticker".into());
    }
    let valid = ticker
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-');
    if !valid || ticker.len() > 10 {
        return Err("bad-ticker".into());
    }
    Ok(ticker)
}

fn parse_membership(chunk: &str) -> Result<IndexMembership, String> {
    let parts: Vec<&str> = chunk.split(':').collect();
    if parts.len() != 3 {
        return Err("bad-membership".into());
    }
    let index_id = IndexId::from_str(parts[0]).map_err(|_| "bad-membership".to_string())?;
    let start = NaiveDate::from_str(parts[1].trim()).map_err(|_| "bad-membership".to_string())?;
    let end = if parts[2].trim().is_empty() {
        None
    } else {
        Some(NaiveDate::from_str(parts[2].trim()).map_err(|_| "bad-membership".to_string())?)
    };
    if let Some(end) = end {
        if end < start {
            return Err("bad-membership".into());
        }
    }
    Ok(IndexMembership {
        index_id,
        start,
        end,
    })
}

fn is_unique_violation(e: &rusqlite::Error) -> bool {
    matches!(
        e,
        rusqlite::Error::SqliteFailure(err, _)
            if err.code == rusqlite::ErrorCode::ConstraintViolation
    )
}
