//! Fiscal period tags: `2023Q2` for quarters, `2023FY` for fiscal years.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Reporting frequency of a fundamentals series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Quarterly,
    Yearly,
}

impl Frequency {
    /// Character at position 5 of the period tag (`Q` or `F`), used by the
    /// SQL templates to filter by period kind.
    pub fn marker(self) -> &'static str {
        match self {
            Frequency::Quarterly => "Q",
            Frequency::Yearly => "F",
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Quarterly => write!(f, "quarterly"),
            Frequency::Yearly => write!(f, "yearly"),
        }
    }
}

impl FromStr for Frequency {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "quarterly" | "quarter" | "q" => Ok(Frequency::Quarterly),
            "yearly" | "annual" | "year" | "fy" | "y" => Ok(Frequency::Yearly),
            other => Err(format!("unknown frequency `{other}`")),
        }
    }
}

/// A fiscal period: one quarter (`2023Q2`) or one fiscal year (`2023FY`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiscalPeriod {
    pub year: i32,
    pub kind: PeriodKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PeriodKind {
    Quarter(u8),
    FullYear,
}

impl FiscalPeriod {
    pub fn quarter(year: i32, q: u8) -> Self {
        assert!((1..=4).contains(&q), "quarter must be 1..=4");
        FiscalPeriod {
            year,
            kind: PeriodKind::Quarter(q),
        }
    }

    pub fn full_year(year: i32) -> Self {
        FiscalPeriod {
            year,
            kind: PeriodKind::FullYear,
        }
    }

    pub fn frequency(&self) -> Frequency {
        match self.kind {
            PeriodKind::Quarter(_) => Frequency::Quarterly,
            PeriodKind::FullYear => Frequency::Yearly,
        }
    }

    /// Calendar end date of the period, assuming calendar-aligned fiscal years.
    pub fn end_date(&self) -> NaiveDate {
        let (m, d) = match self.kind {
            PeriodKind::Quarter(1) => (3, 31),
            PeriodKind::Quarter(2) => (6, 30),
            PeriodKind::Quarter(3) => (9, 30),
            PeriodKind::Quarter(4) | PeriodKind::FullYear => (12, 31),
            PeriodKind::Quarter(_) => unreachable!(),
        };
        NaiveDate::from_ymd_opt(self.year, m, d).expect("valid period end date")
    }

    /// Next period of the same frequency.
    pub fn succ(&self) -> FiscalPeriod {
        match self.kind {
            PeriodKind::Quarter(4) => FiscalPeriod::quarter(self.year + 1, 1),
            PeriodKind::Quarter(q) => FiscalPeriod::quarter(self.year, q + 1),
            PeriodKind::FullYear => FiscalPeriod::full_year(self.year + 1),
        }
    }
}

impl fmt::Display for FiscalPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PeriodKind::Quarter(q) => write!(f, "{}Q{}", self.year, q),
            PeriodKind::FullYear => write!(f, "{}FY", self.year),
        }
    }
}

impl FromStr for FiscalPeriod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let norm: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_uppercase();
        if norm.len() != 6 {
            return Err(format!("malformed fiscal period `{s}`"));
        }
        let year: i32 = norm[..4]
            .parse()
            .map_err(|_| format!("malformed fiscal period `{s}`"))?;
        match &norm[4..] {
            "FY" => Ok(FiscalPeriod::full_year(year)),
            tag if tag.starts_with('Q') => {
                let q: u8 = tag[1..]
                    .parse()
                    .map_err(|_| format!("malformed fiscal period `{s}`"))?;
                if (1..=4).contains(&q) {
                    Ok(FiscalPeriod::quarter(year, q))
                } else {
                    Err(format!("quarter out of range in `{s}`"))
                }
            }
            _ => Err(format!("malformed fiscal period `{s}`")),
        }
    }
}

impl Serialize for FiscalPeriod {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FiscalPeriod {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
