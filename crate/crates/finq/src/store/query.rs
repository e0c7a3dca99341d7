//! Read operations over the store, all routed through the vetted templates.

use std::collections::BTreeSet;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rusqlite::types::Value as SqlValue;
use rust_decimal::Decimal;

use super::types::{
    CompanyRecord, FundamentalRecord, IndexId, IndexMembership, LineItem, PriceBar, StatementBundle,
};
use super::{Periodicity, Store, StoreError};
use crate::period::{FiscalPeriod, Frequency};
use crate::vocab::{StatementKind, Vocabulary};

/// Which periods a statement request covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeriodSelector {
    LastQuarters(usize),
    LastYears(usize),
    /// Inclusive fiscal-period range; both bounds share one frequency.
    Range(FiscalPeriod, FiscalPeriod),
}

impl PeriodSelector {
    pub fn frequency(&self) -> Frequency {
        match self {
            PeriodSelector::LastQuarters(_) => Frequency::Quarterly,
            PeriodSelector::LastYears(_) => Frequency::Yearly,
            PeriodSelector::Range(start, _) => start.frequency(),
        }
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        match self {
            PeriodSelector::LastQuarters(n) | PeriodSelector::LastYears(n) if *n == 0 => {
                Err(StoreError::Precondition("period count must be >= 1".into()))
            }
            PeriodSelector::Range(start, end) => {
                if start.frequency() != end.frequency() {
                    return Err(StoreError::Precondition(
                        "period range bounds must share a frequency".into(),
                    ));
                }
                if start > end {
                    return Err(StoreError::Precondition(
                        "period range start is after its end".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn text(v: Option<String>) -> SqlValue {
    match v {
        Some(s) => SqlValue::Text(s),
        None => SqlValue::Null,
    }
}

fn read_bar(row: &rusqlite::Row<'_>) -> rusqlite::Result<PriceBar> {
    let dec = |i: usize, row: &rusqlite::Row<'_>| -> rusqlite::Result<Decimal> {
        let s: String = row.get(i)?;
        Decimal::from_str(&s).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(i, rusqlite::types::Type::Text, Box::new(e))
        })
    };
    Ok(PriceBar {
        ticker: row.get(0)?,
        date: NaiveDate::from_str(&row.get::<_, String>(1)?).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(1, rusqlite::types::Type::Text, Box::new(e))
        })?,
        open: dec(2, row)?,
        high: dec(3, row)?,
        low: dec(4, row)?,
        close: dec(5, row)?,
        adj_close: dec(6, row)?,
        volume: row.get::<_, i64>(7)? as u64,
    })
}

fn read_fundamental(row: &rusqlite::Row<'_>) -> rusqlite::Result<FundamentalRecord> {
    let period: String = row.get(1)?;
    let value: String = row.get(4)?;
    Ok(FundamentalRecord {
        ticker: row.get(0)?,
        fiscal_period: FiscalPeriod::from_str(&period).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(1, rusqlite::types::Type::Text, e.into())
        })?,
        period_end_date: NaiveDate::from_str(&row.get::<_, String>(2)?).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(2, rusqlite::types::Type::Text, Box::new(e))
        })?,
        metric: row.get(3)?,
        value: Decimal::from_str(&value).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(4, rusqlite::types::Type::Text, Box::new(e))
        })?,
        unit: row.get(5)?,
    })
}

impl Store {
    /// The `n` most recent trading days at or before `end` (default:
    /// latest available), ascending by date.
    pub fn last_n_trading_days(
        &self,
        ticker: &str,
        n: usize,
        end: Option<NaiveDate>,
    ) -> Result<Vec<PriceBar>, StoreError> {
        if n == 0 {
            return Err(StoreError::Precondition("n must be >= 1".into()));
        }
        self.require_price_ticker(ticker)?;
        let bars = self.query_template(
            "price_window",
            &[
                ("ticker", SqlValue::Text(ticker.to_string())),
                ("start_date", SqlValue::Null),
                ("end_date", text(end.map(|d| d.to_string()))),
                ("limit_n", SqlValue::Integer(n as i64)),
            ],
            read_bar,
        )?;
        if bars.len() < n {
            return Err(StoreError::InsufficientData {
                requested: n,
                available: bars.len(),
            });
        }
        Ok(bars)
    }

    /// Bars in the inclusive `[start, end]` window. Non-daily periodicity
    /// keeps the last trading bar of each calendar week/month/year.
    pub fn price_range(
        &self,
        ticker: &str,
        start: NaiveDate,
        end: NaiveDate,
        periodicity: Periodicity,
    ) -> Result<Vec<PriceBar>, StoreError> {
        if start > end {
            return Err(StoreError::Precondition(format!(
                "start {start} is after end {end}"
            )));
        }
        self.require_price_ticker(ticker)?;
        let bars = self.query_template(
            "price_window",
            &[
                ("ticker", SqlValue::Text(ticker.to_string())),
                ("start_date", SqlValue::Text(start.to_string())),
                ("end_date", SqlValue::Text(end.to_string())),
                ("limit_n", SqlValue::Null),
            ],
            read_bar,
        )?;
        if bars.is_empty() {
            return Err(StoreError::EmptyRange);
        }
        Ok(resample_last_per_bucket(bars, periodicity))
    }

    /// The `n_periods` most recent observations of one metric, ascending.
    pub fn fundamental_series(
        &self,
        ticker: &str,
        metric: &str,
        n_periods: usize,
        frequency: Frequency,
    ) -> Result<Vec<FundamentalRecord>, StoreError> {
        if n_periods == 0 {
            return Err(StoreError::Precondition("n_periods must be >= 1".into()));
        }
        if Vocabulary::get().by_id(metric).is_none() {
            return Err(StoreError::UnknownMetric(metric.to_string()));
        }
        self.require_fundamental_ticker(ticker)?;
        let records = self.query_template(
            "fundamental_window",
            &[
                ("ticker", SqlValue::Text(ticker.to_string())),
                ("metric", SqlValue::Text(metric.to_string())),
                (
                    "period_marker",
                    SqlValue::Text(frequency.marker().to_string()),
                ),
                ("limit_n", SqlValue::Integer(n_periods as i64)),
            ],
            read_fundamental,
        )?;
        if records.len() < n_periods {
            return Err(StoreError::InsufficientData {
                requested: n_periods,
                available: records.len(),
            });
        }
        Ok(records)
    }

    /// Every observation of one metric at one frequency, ascending; may be
    /// empty.
    pub fn fundamental_history(
        &self,
        ticker: &str,
        metric: &str,
        frequency: Frequency,
    ) -> Result<Vec<FundamentalRecord>, StoreError> {
        if Vocabulary::get().by_id(metric).is_none() {
            return Err(StoreError::UnknownMetric(metric.to_string()));
        }
        self.query_template(
            "fundamental_window",
            &[
                ("ticker", SqlValue::Text(ticker.to_string())),
                ("metric", SqlValue::Text(metric.to_string())),
                (
                    "period_marker",
                    SqlValue::Text(frequency.marker().to_string()),
                ),
                ("limit_n", SqlValue::Null),
            ],
            read_fundamental,
        )
    }

    /// Assemble one financial statement over the selected periods. Metrics
    /// with no data in the selection are omitted; per-period gaps within an
    /// included metric are explicit missing markers.
    pub fn statement(
        &self,
        ticker: &str,
        kind: StatementKind,
        selector: &PeriodSelector,
    ) -> Result<StatementBundle, StoreError> {
        selector.validate()?;
        self.require_fundamental_ticker(ticker)?;

        let frequency = selector.frequency();
        let rows = self.query_template(
            "statement_rows",
            &[
                ("ticker", SqlValue::Text(ticker.to_string())),
                (
                    "period_marker",
                    SqlValue::Text(frequency.marker().to_string()),
                ),
            ],
            read_fundamental,
        )?;

        let vocab = Vocabulary::get();
        let statement_rows: Vec<&FundamentalRecord> = rows
            .iter()
            .filter(|r| {
                vocab
                    .by_id(&r.metric)
                    .map(|m| m.statement == kind)
                    .unwrap_or(false)
            })
            .collect();

        let all_periods: BTreeSet<FiscalPeriod> =
            statement_rows.iter().map(|r| r.fiscal_period).collect();
        let periods: Vec<FiscalPeriod> = match selector {
            PeriodSelector::LastQuarters(n) | PeriodSelector::LastYears(n) => {
                let mut v: Vec<FiscalPeriod> = all_periods.iter().copied().collect();
                if v.len() > *n {
                    v = v.split_off(v.len() - n);
                }
                v
            }
            PeriodSelector::Range(start, end) => all_periods
                .iter()
                .copied()
                .filter(|p| p >= start && p <= end)
                .collect(),
        };
        if periods.is_empty() {
            return Err(StoreError::EmptyRange);
        }

        let mut line_items = Vec::new();
        for metric_def in vocab.statement_metrics(kind) {
            let mut values: Vec<Option<Decimal>> = vec![None; periods.len()];
            let mut unit = metric_def.unit.clone();
            let mut any = false;
            for row in statement_rows.iter().filter(|r| r.metric == metric_def.id) {
                if let Some(pos) = periods.iter().position(|p| *p == row.fiscal_period) {
                    values[pos] = Some(row.value);
                    unit = row.unit.clone();
                    any = true;
                }
            }
            if any {
                line_items.push(LineItem {
                    metric: metric_def.id.clone(),
                    unit,
                    values,
                });
            }
        }

        Ok(StatementBundle {
            ticker: ticker.to_string(),
            statement_kind: kind,
            periods,
            line_items,
        })
    }

    /// Most recent trading date for a ticker, optionally at or before `end`.
    pub fn latest_trading_date(
        &self,
        ticker: &str,
        end: Option<NaiveDate>,
    ) -> Result<NaiveDate, StoreError> {
        let rows = self.query_template(
            "latest_trading_date",
            &[
                ("ticker", SqlValue::Text(ticker.to_string())),
                ("end_date", text(end.map(|d| d.to_string()))),
            ],
            |row| row.get::<_, Option<String>>(0),
        )?;
        match rows.into_iter().next().flatten() {
            Some(s) => NaiveDate::from_str(&s)
                .map_err(|e| StoreError::Precondition(format!("corrupt date in store: {e}"))),
            None => Err(StoreError::UnknownTicker(ticker.to_string())),
        }
    }

    /// Full identity record for one ticker.
    pub fn company(&self, ticker: &str) -> Result<CompanyRecord, StoreError> {
        let base = self.query_template(
            "company_record",
            &[("ticker", SqlValue::Text(ticker.to_string()))],
            |row| Ok((row.get::<_, String>(0)?, row.get::<_, String>(1)?)),
        )?;
        let (ticker, name) = base
            .into_iter()
            .next()
            .ok_or_else(|| StoreError::UnknownTicker(ticker.to_string()))?;
        let aliases = self.query_template(
            "company_aliases",
            &[("ticker", SqlValue::Text(ticker.clone()))],
            |row| row.get::<_, String>(0),
        )?;
        let index_memberships = self.query_template(
            "company_memberships",
            &[("ticker", SqlValue::Text(ticker.clone()))],
            read_membership,
        )?;
        Ok(CompanyRecord {
            ticker,
            name,
            aliases,
            index_memberships,
        })
    }

    /// Exact normalized name/alias lookup; `None` when unregistered.
    pub fn ticker_for_name(&self, name_norm: &str) -> Result<Option<String>, StoreError> {
        let rows = self.query_template(
            "company_by_name",
            &[("name_norm", SqlValue::Text(name_norm.to_string()))],
            |row| row.get::<_, String>(0),
        )?;
        Ok(rows.into_iter().next())
    }

    /// Membership intervals for one index as (ticker, name, interval).
    pub fn index_members(
        &self,
        index: IndexId,
    ) -> Result<Vec<(String, String, IndexMembership)>, StoreError> {
        self.query_template(
            "index_members",
            &[("index_id", SqlValue::Text(index.to_string()))],
            |row| {
                let ticker: String = row.get(0)?;
                let name: String = row.get(1)?;
                let start: String = row.get(2)?;
                let end: Option<String> = row.get(3)?;
                Ok((
                    ticker,
                    name,
                    IndexMembership {
                        index_id: index,
                        start: NaiveDate::from_str(&start).map_err(|e| {
                            rusqlite::Error::FromSqlConversionFailure(
                                2,
                                rusqlite::types::Type::Text,
                                Box::new(e),
                            )
                        })?,
                        end: match end {
                            Some(s) => Some(NaiveDate::from_str(&s).map_err(|e| {
                                rusqlite::Error::FromSqlConversionFailure(
                                    3,
                                    rusqlite::types::Type::Text,
                                    Box::new(e),
                                )
                            })?),
                            None => None,
                        },
                    },
                ))
            },
        )
    }

    /// Every ticker with at least one price bar.
    pub fn price_tickers(&self) -> Result<Vec<String>, StoreError> {
        self.query_template("all_tickers_with_prices", &[], |row| {
            row.get::<_, String>(0)
        })
    }

    fn require_price_ticker(&self, ticker: &str) -> Result<(), StoreError> {
        let rows = self.query_template(
            "ticker_has_prices",
            &[("ticker", SqlValue::Text(ticker.to_string()))],
            |row| row.get::<_, i64>(0),
        )?;
        if rows.first().copied().unwrap_or(0) == 1 {
            Ok(())
        } else {
            Err(StoreError::UnknownTicker(ticker.to_string()))
        }
    }

    fn require_fundamental_ticker(&self, ticker: &str) -> Result<(), StoreError> {
        let rows = self.query_template(
            "ticker_has_fundamentals",
            &[("ticker", SqlValue::Text(ticker.to_string()))],
            |row| row.get::<_, i64>(0),
        )?;
        if rows.first().copied().unwrap_or(0) == 1 {
            Ok(())
        } else {
            Err(StoreError::UnknownTicker(ticker.to_string()))
        }
    }
}

fn read_membership(row: &rusqlite::Row<'_>) -> rusqlite::Result<IndexMembership> {
    let index: String = row.get(0)?;
    let start: String = row.get(1)?;
    let end: Option<String> = row.get(2)?;
    let bad = |i: usize, e: Box<dyn std::error::Error + Send + Sync>| {
        rusqlite::Error::FromSqlConversionFailure(i, rusqlite::types::Type::Text, e)
    };
    Ok(IndexMembership {
        index_id: IndexId::from_str(&index).map_err(|e| bad(0, e.into()))?,
        start: NaiveDate::from_str(&start).map_err(|e| bad(1, Box::new(e)))?,
        end: match end {
            Some(s) => Some(NaiveDate::from_str(&s).map_err(|e| bad(2, Box::new(e)))?),
            None => None,
        },
    })
}

/// Keep the last bar of each calendar bucket; daily passes through.
fn resample_last_per_bucket(bars: Vec<PriceBar>, periodicity: Periodicity) -> Vec<PriceBar> {
    if periodicity == Periodicity::Daily {
        return bars;
    }
    let bucket = |d: NaiveDate| -> (i32, u32) {
        match periodicity {
            Periodicity::Daily => unreachable!(),
            Periodicity::Weekly => {
                let week = d.iso_week();
                (week.year(), week.week())
            }
            Periodicity::Monthly => (d.year(), d.month()),
            Periodicity::Yearly => (d.year(), 0),
        }
    };
    let mut out: Vec<PriceBar> = Vec::new();
    for bar in bars {
        let key = bucket(bar.date);
        match out.last() {
            Some(last) if bucket(last.date) == key => {
                *out.last_mut().unwrap() = bar;
            }
            _ => out.push(bar),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seeded_store() -> Store {
        let store = Store::in_memory().unwrap();
        // Ten NVDA weekdays across two full ISO weeks: 2024-01-08 .. 2024-01-19.
        let mut prices = String::from("ticker,date,open,high,low,close,adj_close,volume\n");
        let days = [
            "2024-01-08",
            "2024-01-09",
            "2024-01-10",
            "2024-01-11",
            "2024-01-12",
            "2024-01-15",
            "2024-01-16",
            "2024-01-17",
            "2024-01-18",
            "2024-01-19",
        ];
        for (i, d) in days.iter().enumerate() {
            let close = 100 + i;
            prices.push_str(&format!(
                "NVDA,{d},{o}.00,{h}.50,{l}.50,{c}.00,{c}.00,1000\n",
                o = close,
                h = close,
                l = close - 1,
                c = close,
            ));
        }
        store.ingest_prices(prices.as_bytes()).unwrap();

        let mut funds = String::from("ticker,fiscal_period,period_end_date,metric,value,unit\n");
        for (i, (p, e)) in [
            ("2022Q1", "2022-03-31"),
            ("2022Q2", "2022-06-30"),
            ("2022Q3", "2022-09-30"),
            ("2022Q4", "2022-12-31"),
            ("2023Q1", "2023-03-31"),
            ("2023Q2", "2023-06-30"),
            ("2023Q3", "2023-09-30"),
            ("2023Q4", "2023-12-31"),
        ]
        .iter()
        .enumerate()
        {
            funds.push_str(&format!("KO,{p},{e},revenue,{v}.00,USD\n", v = 10000 + i));
            funds.push_str(&format!("KO,{p},{e},net_income,{v}.00,USD\n", v = 2000 + i));
        }
        for (p, e) in [
            ("2021FY", "2021-12-31"),
            ("2022FY", "2022-12-31"),
            ("2023FY", "2023-12-31"),
        ] {
            funds.push_str(&format!("KO,{p},{e},eps_diluted,2.19,USD/share\n"));
            funds.push_str(&format!("KO,{p},{e},revenue,43004.00,USD\n"));
        }
        store.ingest_fundamentals(funds.as_bytes()).unwrap();
        store
    }

    #[test]
    fn last_n_trading_days_returns_ascending_suffix() {
        let store = seeded_store();
        let bars = store.last_n_trading_days("NVDA", 10, None).unwrap();
        assert_eq!(bars.len(), 10);
        assert!(bars.windows(2).all(|w| w[0].date < w[1].date));

        let one = store.last_n_trading_days("NVDA", 1, None).unwrap();
        assert_eq!(one[0].date.to_string(), "2024-01-19");

        assert!(matches!(
            store.last_n_trading_days("NVDA", 11, None),
            Err(StoreError::InsufficientData {
                requested: 11,
                available: 10
            })
        ));
        assert!(matches!(
            store.last_n_trading_days("ZZZZ", 1, None),
            Err(StoreError::UnknownTicker(_))
        ));
    }

    #[test]
    fn daily_range_is_inclusive_on_both_ends() {
        let store = seeded_store();
        let bars = store
            .price_range(
                "NVDA",
                NaiveDate::from_ymd_opt(2024, 1, 8).unwrap(),
                NaiveDate::from_ymd_opt(2024, 1, 12).unwrap(),
                Periodicity::Daily,
            )
            .unwrap();
        assert_eq!(bars.len(), 5);
        assert_eq!(bars[0].date.to_string(), "2024-01-08");
        assert_eq!(bars[4].date.to_string(), "2024-01-12");
    }

    #[test]
    fn weekly_resample_keeps_the_friday_bar() {
        let store = seeded_store();
        let bars = store
            .price_range(
                "NVDA",
                NaiveDate::from_ymd_opt(2024, 1, 8).unwrap(),
                NaiveDate::from_ymd_opt(2024, 1, 19).unwrap(),
                Periodicity::Weekly,
            )
            .unwrap();
        assert_eq!(bars.len(), 2);
        assert_eq!(bars[0].date.to_string(), "2024-01-12");
        assert_eq!(bars[1].date.to_string(), "2024-01-19");
    }

    #[test]
    fn reversed_range_is_a_precondition_error() {
        let store = seeded_store();
        assert!(matches!(
            store.price_range(
                "NVDA",
                NaiveDate::from_ymd_opt(2024, 1, 12).unwrap(),
                NaiveDate::from_ymd_opt(2024, 1, 8).unwrap(),
                Periodicity::Daily,
            ),
            Err(StoreError::Precondition(_))
        ));
    }

    #[test]
    fn empty_window_is_empty_range() {
        let store = seeded_store();
        assert!(matches!(
            store.price_range(
                "NVDA",
                NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
                NaiveDate::from_ymd_opt(2020, 1, 31).unwrap(),
                Periodicity::Daily,
            ),
            Err(StoreError::EmptyRange)
        ));
    }

    #[test]
    fn fundamental_series_latest_quarters_ascending() {
        let store = seeded_store();
        let rows = store
            .fundamental_series("KO", "revenue", 4, Frequency::Quarterly)
            .unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].fiscal_period.to_string(), "2023Q1");
        assert_eq!(rows[3].fiscal_period.to_string(), "2023Q4");

        let yearly = store
            .fundamental_series("KO", "eps_diluted", 3, Frequency::Yearly)
            .unwrap();
        assert_eq!(yearly.len(), 3);
        assert_eq!(yearly[0].fiscal_period.to_string(), "2021FY");

        assert!(matches!(
            store.fundamental_series("KO", "moat_score", 1, Frequency::Quarterly),
            Err(StoreError::UnknownMetric(_))
        ));
        assert!(matches!(
            store.fundamental_series("KO", "revenue", 40, Frequency::Quarterly),
            Err(StoreError::InsufficientData { .. })
        ));
    }

    #[test]
    fn statement_selects_periods_and_marks_missing() {
        let store = seeded_store();
        let bundle = store
            .statement(
                "KO",
                StatementKind::IncomeStatement,
                &PeriodSelector::LastQuarters(2),
            )
            .unwrap();
        assert_eq!(bundle.periods.len(), 2);
        assert_eq!(bundle.periods[1].to_string(), "2023Q4");
        assert!(bundle.line_items.iter().any(|li| li.metric == "revenue"));
        // eps_diluted exists only yearly, so it is absent from a quarterly bundle.
        assert!(!bundle
            .line_items
            .iter()
            .any(|li| li.metric == "eps_diluted"));

        let range = store
            .statement(
                "KO",
                StatementKind::IncomeStatement,
                &PeriodSelector::Range("2022Q2".parse().unwrap(), "2023Q3".parse().unwrap()),
            )
            .unwrap();
        assert_eq!(range.periods.len(), 6);

        assert!(matches!(
            store.statement(
                "KO",
                StatementKind::BalanceSheet,
                &PeriodSelector::LastQuarters(2),
            ),
            Err(StoreError::EmptyRange)
        ));
    }

    #[test]
    fn round_trip_preserves_decimal_text() {
        let store = Store::in_memory().unwrap();
        let csv = "\
ticker,date,open,high,low,close,adj_close,volume
KO,2024-01-02,59.10,59.90,58.75,59.50,59.50,12000000
";
        store.ingest_prices(csv.as_bytes()).unwrap();
        let bars = store.last_n_trading_days("KO", 1, None).unwrap();
        assert_eq!(bars[0].close.to_string(), "59.50");
        assert_eq!(bars[0].low.to_string(), "58.75");
    }
}
