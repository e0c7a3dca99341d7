//! Row types of the financial store.

use chrono::NaiveDate;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::period::FiscalPeriod;
use crate::vocab::StatementKind;

/// One daily OHLCV bar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceBar {
    pub ticker: String,
    pub date: NaiveDate,
    pub open: Decimal,
    pub high: Decimal,
    pub low: Decimal,
    pub close: Decimal,
    pub adj_close: Decimal,
    pub volume: u64,
}

impl PriceBar {
    /// `low <= min(open, close) <= max(open, close) <= high`.
    pub fn ohlc_ordered(&self) -> bool {
        let lo = self.open.min(self.close);
        let hi = self.open.max(self.close);
        self.low <= lo && hi <= self.high
    }
}

/// One fundamentals observation: a metric value for one fiscal period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundamentalRecord {
    pub ticker: String,
    pub fiscal_period: FiscalPeriod,
    pub period_end_date: NaiveDate,
    pub metric: String,
    pub value: Decimal,
    pub unit: String,
}

/// Index membership interval; `end = None` means current member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMembership {
    pub index_id: IndexId,
    pub start: NaiveDate,
    pub end: Option<NaiveDate>,
}

impl IndexMembership {
    pub fn overlaps(&self, other: &IndexMembership) -> bool {
        if self.index_id != other.index_id {
            return false;
        }
        let self_end = self.end.unwrap_or(NaiveDate::MAX);
        let other_end = other.end.unwrap_or(NaiveDate::MAX);
        self.start <= other_end && other.start <= self_end
    }
}

/// Supported index universes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexId {
    #[serde(rename = "NASDAQ100")]
    Nasdaq100,
    #[serde(rename = "SP500")]
    Sp500,
}

impl std::fmt::Display for IndexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IndexId::Nasdaq100 => write!(f, "NASDAQ100"),
            IndexId::Sp500 => write!(f, "SP500"),
        }
    }
}

impl FromStr for IndexId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace(['-', '_', ' '], "").as_str() {
            "NASDAQ100" | "NDX" => Ok(IndexId::Nasdaq100),
            "SP500" | "SPX" => Ok(IndexId::Sp500),
            other => Err(format!("unknown index `{other}`")),
        }
    }
}

/// Company identity row: registry of names, aliases, and memberships.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompanyRecord {
    pub ticker: String,
    pub name: String,
    pub aliases: Vec<String>,
    pub index_memberships: Vec<IndexMembership>,
}

/// One line-item series within a statement bundle; `None` marks a period
/// with no reported value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineItem {
    pub metric: String,
    pub unit: String,
    pub values: Vec<Option<Decimal>>,
}

/// A financial statement over an ordered set of periods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementBundle {
    pub ticker: String,
    pub statement_kind: StatementKind,
    pub periods: Vec<FiscalPeriod>,
    pub line_items: Vec<LineItem>,
}

/// Price bar sampling frequency for range queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Periodicity {
    #[default]
    Daily,
    Weekly,
    Monthly,
    Yearly,
}

impl std::fmt::Display for Periodicity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Periodicity::Daily => "daily",
            Periodicity::Weekly => "weekly",
            Periodicity::Monthly => "monthly",
            Periodicity::Yearly => "yearly",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Periodicity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "daily" | "day" => Ok(Periodicity::Daily),
            "weekly" | "week" => Ok(Periodicity::Weekly),
            "monthly" | "month" => Ok(Periodicity::Monthly),
            "yearly" | "year" | "annual" => Ok(Periodicity::Yearly),
            other => Err(format!("unknown periodicity `{other}`")),
        }
    }
}

/// Outcome of one CSV ingestion: every input row is either loaded or
/// rejected with a reason.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub loaded: usize,
    pub rejected: usize,
    pub rejections: Vec<Rejection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based data row number (header excluded).
    pub row: usize,
    pub reason: String,
}

impl IngestReport {
    pub fn total(&self) -> usize {
        self.loaded + self.rejected
    }

    pub(crate) fn reject(&mut self, row: usize, reason: impl Into<String>) {
        self.rejected += 1;
        self.rejections.push(Rejection {
            row,
            reason: reason.into(),
        });
    }
}
