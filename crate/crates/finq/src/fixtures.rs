//! Deterministic synthetic market data.
//!
//! Real exchange data is licensed, so the repo ships a seeded generator
//! instead: weekday OHLCV random walks and smooth fundamentals series for a
//! fixed company universe. Identical seeds produce identical CSV bytes.

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::store::{IngestReport, Store, StoreError};

/// One company of the universe.
#[derive(Debug, Clone)]
pub struct UniverseEntry {
    pub ticker: &'static str,
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    /// `INDEX:start:end` chunks, matching the companies.csv column.
    pub memberships: &'static str,
    pub bank: bool,
}

/// The 21 tickers exercised by the bundled benchmark suite.
pub const STANDARD_UNIVERSE: &[UniverseEntry] = &[
    UniverseEntry {
        ticker: "AAPL",
        name: "Apple Inc.",
        aliases: &["Apple"],
        memberships: "NASDAQ100:1985-01-02:;SP500:1982-11-30:",
        bank: false,
    },
    UniverseEntry {
        ticker: "MSFT",
        name: "Microsoft Corporation",
        aliases: &["Microsoft"],
        memberships: "NASDAQ100:1986-03-13:;SP500:1994-06-01:",
        bank: false,
    },
    UniverseEntry {
        ticker: "NVDA",
        name: "NVIDIA Corporation",
        aliases: &["NVIDIA", "Nvidia Corp"],
        memberships: "NASDAQ100:2001-12-03:;SP500:2001-11-30:",
        bank: false,
    },
    UniverseEntry {
        ticker: "AMZN",
        name: "Amazon.com, Inc.",
        aliases: &["Amazon"],
        memberships: "NASDAQ100:1998-12-01:;SP500:2005-11-18:",
        bank: false,
    },
    UniverseEntry {
        ticker: "GOOGL",
        name: "Alphabet Inc.",
        aliases: &["Alphabet", "Google"],
        memberships: "NASDAQ100:2006-01-03:;SP500:2006-04-03:",
        bank: false,
    },
    UniverseEntry {
        ticker: "META",
        name: "Meta Platforms, Inc.",
        aliases: &["Meta", "Facebook"],
        memberships: "NASDAQ100:2012-12-12:;SP500:2013-12-23:",
        bank: false,
    },
    UniverseEntry {
        ticker: "TSLA",
        name: "Tesla, Inc.",
        aliases: &["Tesla"],
        memberships: "NASDAQ100:2013-07-15:;SP500:2020-12-21:",
        bank: false,
    },
    UniverseEntry {
        ticker: "WMT",
        name: "Walmart Inc.",
        aliases: &["Walmart", "Wal-Mart"],
        memberships: "SP500:1982-08-19:",
        bank: false,
    },
    UniverseEntry {
        ticker: "JPM",
        name: "JPMorgan Chase & Co.",
        aliases: &["JPMorgan", "JP Morgan"],
        memberships: "SP500:1975-06-30:",
        bank: true,
    },
    UniverseEntry {
        ticker: "KO",
        name: "The Coca-Cola Company",
        aliases: &["Coca-Cola", "Coca Cola"],
        memberships: "SP500:1957-03-04:",
        bank: false,
    },
    UniverseEntry {
        ticker: "PEP",
        name: "PepsiCo, Inc.",
        aliases: &["PepsiCo", "Pepsi"],
        memberships: "NASDAQ100:2018-12-24:;SP500:1957-03-04:",
        bank: false,
    },
    UniverseEntry {
        ticker: "COST",
        name: "Costco Wholesale Corporation",
        aliases: &["Costco"],
        memberships: "NASDAQ100:1993-10-11:;SP500:1993-10-01:",
        bank: false,
    },
    UniverseEntry {
        ticker: "INTC",
        name: "Intel Corporation",
        aliases: &["Intel"],
        memberships: "NASDAQ100:1985-01-02:;SP500:1976-07-01:",
        bank: false,
    },
    UniverseEntry {
        ticker: "NFLX",
        name: "Netflix, Inc.",
        aliases: &["Netflix"],
        memberships: "NASDAQ100:2004-12-20:;SP500:2010-12-17:",
        bank: false,
    },
    UniverseEntry {
        ticker: "ORCL",
        name: "Oracle Corporation",
        aliases: &["Oracle"],
        memberships: "SP500:1989-08-31:",
        bank: false,
    },
    UniverseEntry {
        ticker: "IBM",
        name: "International Business Machines Corporation",
        aliases: &["IBM Corp"],
        memberships: "SP500:1957-03-04:",
        bank: false,
    },
    UniverseEntry {
        ticker: "BAC",
        name: "Bank of America Corporation",
        aliases: &["Bank of America"],
        memberships: "SP500:1976-06-30:",
        bank: true,
    },
    UniverseEntry {
        ticker: "GS",
        name: "The Goldman Sachs Group, Inc.",
        aliases: &["Goldman Sachs", "Goldman"],
        memberships: "SP500:2002-07-22:",
        bank: true,
    },
    UniverseEntry {
        ticker: "MS",
        name: "Morgan Stanley",
        aliases: &["MorganStanley"],
        memberships: "SP500:1993-07-01:",
        bank: true,
    },
    UniverseEntry {
        ticker: "C",
        name: "Citigroup Inc.",
        aliases: &["Citigroup", "Citi"],
        memberships: "SP500:1988-05-31:",
        bank: true,
    },
    UniverseEntry {
        ticker: "V",
        name: "Visa Inc.",
        aliases: &["Visa"],
        memberships: "SP500:2009-12-21:",
        bank: false,
    },
];

/// Metrics generated for every ticker (the bank-only ones are added on top).
const COMMON_METRICS: &[&str] = &[
    "revenue",
    "cost_of_revenue",
    "gross_profit",
    "operating_income",
    "rnd_expense",
    "sgna_expense",
    "interest_expense",
    "interest_income",
    "income_tax_expense",
    "income_before_tax",
    "net_income",
    "operating_margin",
    "eps_basic",
    "eps_diluted",
    "total_assets",
    "total_liabilities",
    "total_equity",
    "operating_cash_flow",
    "capital_expenditures",
    "dividends_paid",
];
const BANK_METRICS: &[&str] = &[
    "net_interest_income",
    "provisions_for_credit_losses",
    "operating_revenue",
];

#[derive(Debug, Clone)]
pub struct FixtureConfig {
    pub seed: u64,
    pub price_start: NaiveDate,
    pub price_end: NaiveDate,
    /// Inclusive quarterly span as (first year, first quarter, last year, last quarter).
    pub quarters: (i32, u8, i32, u8),
    /// Inclusive fiscal-year span.
    pub years: (i32, i32),
}

impl Default for FixtureConfig {
    fn default() -> Self {
        // Two full years of data after the bundled mock-model cutoff
        // (2024-06-01), so the prediction study has complete post-cutoff
        // truth windows even at quarterly frequency.
        FixtureConfig {
            seed: 7,
            price_start: NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(),
            price_end: NaiveDate::from_ymd_opt(2026, 6, 30).unwrap(),
            quarters: (2020, 1, 2026, 2),
            years: (2010, 2025),
        }
    }
}

/// Generated CSV payloads in the store's documented formats.
#[derive(Debug, Clone)]
pub struct FixtureData {
    pub prices_csv: String,
    pub fundamentals_csv: String,
    pub companies_csv: String,
}

impl FixtureData {
    /// Ingest all three files into a store.
    pub fn ingest_into(&self, store: &Store) -> Result<[IngestReport; 3], StoreError> {
        let prices = store.ingest_prices(self.prices_csv.as_bytes())?;
        let fundamentals = store.ingest_fundamentals(self.fundamentals_csv.as_bytes())?;
        let companies = store.ingest_companies(self.companies_csv.as_bytes())?;
        Ok([prices, fundamentals, companies])
    }

    pub fn write_to(&self, dir: impl AsRef<Path>) -> std::io::Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("prices.csv"), &self.prices_csv)?;
        std::fs::write(dir.join("fundamentals.csv"), &self.fundamentals_csv)?;
        std::fs::write(dir.join("companies.csv"), &self.companies_csv)?;
        Ok(())
    }
}

fn ticker_hash(seed: u64, ticker: &str, salt: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in ticker.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ salt.wrapping_mul(0x2545_f491_4f6c_dd1d)
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cents(v: i64) -> String {
    format!("{}.{:02}", v / 100, v % 100)
}

fn is_weekday(d: NaiveDate) -> bool {
    !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Generate the full standard-universe fixture.
pub fn generate(config: &FixtureConfig) -> FixtureData {
    generate_for(config, STANDARD_UNIVERSE)
}

/// Generate for an arbitrary universe (tests use small synthetic ones).
pub fn generate_for(config: &FixtureConfig, universe: &[UniverseEntry]) -> FixtureData {
    let mut prices = String::from("ticker,date,open,high,low,close,adj_close,volume\n");
    let mut fundamentals = String::from("ticker,fiscal_period,period_end_date,metric,value,unit\n");
    let mut companies = String::from("ticker,name,aliases,index_memberships\n");

    for entry in universe {
        write_price_series(&mut prices, config, entry.ticker);
        write_fundamentals(&mut fundamentals, config, entry);
        writeln!(
            companies,
            "{},{},{},{}",
            entry.ticker,
            csv_field(entry.name),
            csv_field(&entry.aliases.join("|")),
            entry.memberships
        )
        .expect("string write");
    }

    FixtureData {
        prices_csv: prices,
        fundamentals_csv: fundamentals,
        companies_csv: companies,
    }
}

fn write_price_series(out: &mut String, config: &FixtureConfig, ticker: &str) {
    let mut rng = ChaCha12Rng::seed_from_u64(ticker_hash(config.seed, ticker, 1));
    // Start price between $20.00 and $420.00, in cents.
    let mut close: i64 = 2_000 + (ticker_hash(config.seed, ticker, 2) % 40_000) as i64;
    let mut date = config.price_start;
    let mut prev_close = close;
    while date <= config.price_end {
        if is_weekday(date) {
            let drift: f64 = rng.random_range(-0.019..0.021);
            close = ((close as f64) * (1.0 + drift)).round() as i64;
            close = close.clamp(100, 500_000);
            let open = prev_close;
            let hi_base = open.max(close);
            let lo_base = open.min(close);
            let high = hi_base + (rng.random_range(0.0..0.012) * hi_base as f64).round() as i64;
            let low = lo_base - (rng.random_range(0.0..0.012) * lo_base as f64).round() as i64;
            let volume: u64 = rng.random_range(900_000..80_000_000);
            writeln!(
                out,
                "{ticker},{date},{},{},{},{},{},{volume}",
                cents(open),
                cents(high),
                cents(low.max(1)),
                cents(close),
                cents(close),
            )
            .expect("string write");
            prev_close = close;
        }
        date += chrono::Duration::days(1);
    }
}

fn metric_unit(metric: &str) -> &'static str {
    match metric {
        "eps_basic" | "eps_diluted" => "USD/share",
        "operating_margin" => "ratio",
        _ => "USD",
    }
}

fn write_fundamentals(out: &mut String, config: &FixtureConfig, entry: &UniverseEntry) {
    let mut metrics: Vec<&str> = COMMON_METRICS.to_vec();
    if entry.bank {
        metrics.extend_from_slice(BANK_METRICS);
    }
    if entry.ticker == "V" {
        metrics.push("transaction_revenue");
    }

    for metric in metrics {
        let mut rng =
            ChaCha12Rng::seed_from_u64(ticker_hash(config.seed, entry.ticker, fx(metric)));
        // Quarterly series.
        let (y0, q0, y1, q1) = config.quarters;
        let mut period = crate::period::FiscalPeriod::quarter(y0, q0);
        let last = crate::period::FiscalPeriod::quarter(y1, q1);
        let mut step = 0u32;
        while period <= last {
            let value = metric_value(metric, entry.ticker, config.seed, step, false, &mut rng);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                entry.ticker,
                period,
                period.end_date(),
                metric,
                value,
                metric_unit(metric)
            )
            .expect("string write");
            period = period.succ();
            step += 1;
        }
        // Yearly series.
        for (i, year) in (config.years.0..=config.years.1).enumerate() {
            let fy = crate::period::FiscalPeriod::full_year(year);
            let value = metric_value(metric, entry.ticker, config.seed, i as u32, true, &mut rng);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                entry.ticker,
                fy,
                fy.end_date(),
                metric,
                value,
                metric_unit(metric)
            )
            .expect("string write");
        }
    }
}

fn fx(s: &str) -> u64 {
    let mut h: u64 = 5381;
    for b in s.bytes() {
        h = h.wrapping_mul(33) ^ b as u64;
    }
    h
}

fn metric_value(
    metric: &str,
    ticker: &str,
    seed: u64,
    step: u32,
    yearly: bool,
    rng: &mut ChaCha12Rng,
) -> String {
    let noise: f64 = rng.random_range(0.93..1.07);
    match metric {
        "eps_basic" | "eps_diluted" => {
            let base = 50 + (ticker_hash(seed, ticker, fx(metric)) % 500) as i64; // cents
            let scale = if yearly { 4.0 } else { 1.0 };
            let v = (base as f64 * scale * (1.0 + 0.02 * step as f64) * noise).round() as i64;
            cents(v.max(1))
        }
        "operating_margin" => {
            let base = 800 + (ticker_hash(seed, ticker, fx(metric)) % 3_500) as i64; // bp
            let v = (base as f64 * noise).round() as i64;
            format!("0.{:04}", v.clamp(100, 9_999))
        }
        _ => {
            // Currency metrics in millions with one decimal place.
            let base = 1_500 + (ticker_hash(seed, ticker, fx(metric)) % 80_000) as i64;
            let scale = if yearly { 4.0 } else { 1.0 };
            let v =
                (base as f64 * scale * (1.0 + 0.015 * step as f64) * noise * 10.0).round() as i64;
            format!("{}.{}", v / 10, v % 10)
        }
    }
}

/// Small synthetic universes for statistics tests: `n` tickers named
/// SYN00, SYN01, ... with prices only.
pub fn synthetic_price_universe(n: usize) -> Vec<UniverseEntry> {
    // Leak the names: test-scale data, built once per process.
    (0..n)
        .map(|i| {
            let ticker: &'static str = Box::leak(format!("SYN{i:02}").into_boxed_str());
            let name: &'static str = Box::leak(format!("Synthetic Corp {i:02}").into_boxed_str());
            UniverseEntry {
                ticker,
                name,
                aliases: &[],
                memberships: "",
                bank: false,
            }
        })
        .collect()
}
