//! The closed fundamentals vocabulary and its synonym table.
//!
//! The vocabulary lives in `data/metrics.toml`, bundled at compile time so
//! the accepted metric set is reviewable in one place. Unknown metrics are
//! rejected at ingestion; unmapped user phrasings fail loudly at validation.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const VOCAB_TOML: &str = include_str!("../data/metrics.toml");

/// Which financial statement a metric belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementKind {
    IncomeStatement,
    BalanceSheet,
    CashFlow,
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StatementKind::IncomeStatement => "income_statement",
            StatementKind::BalanceSheet => "balance_sheet",
            StatementKind::CashFlow => "cash_flow",
        };
        write!(f, "{s}")
    }
}

impl FromStr for StatementKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_phrase(s).as_str() {
            "income_statement" | "income statement" => Ok(StatementKind::IncomeStatement),
            "balance_sheet" | "balance sheet" => Ok(StatementKind::BalanceSheet),
            "cash_flow" | "cash flow" | "cash flow statement" | "cashflow" => {
                Ok(StatementKind::CashFlow)
            }
            other => Err(format!("unknown statement kind `{other}`")),
        }
    }
}

/// One vocabulary entry.
#[derive(Debug, Clone)]
pub struct MetricDef {
    pub id: String,
    pub statement: StatementKind,
    pub unit: String,
    pub synonyms: Vec<String>,
}

/// The loaded vocabulary: metric ids plus a normalized synonym index.
#[derive(Debug)]
pub struct Vocabulary {
    pub version: u32,
    metrics: Vec<MetricDef>,
    by_id: HashMap<String, usize>,
    by_phrase: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct VocabFile {
    version: u32,
    metrics: Vec<MetricFileEntry>,
}

#[derive(Deserialize)]
struct MetricFileEntry {
    id: String,
    statement: String,
    unit: String,
    #[serde(default)]
    synonyms: Vec<String>,
}

impl Vocabulary {
    fn load() -> Vocabulary {
        let file: VocabFile = toml::from_str(VOCAB_TOML).expect("bundled metrics.toml parses");
        let mut metrics = Vec::with_capacity(file.metrics.len());
        let mut by_id = HashMap::new();
        let mut by_phrase = HashMap::new();
        for entry in file.metrics {
            let statement: StatementKind = entry
                .statement
                .parse()
                .expect("bundled metrics.toml statement kinds are valid");
            let idx = metrics.len();
            let prior = by_id.insert(entry.id.clone(), idx);
            assert!(prior.is_none(), "duplicate metric id {}", entry.id);
            by_phrase.insert(normalize_phrase(&entry.id), idx);
            for syn in &entry.synonyms {
                let key = normalize_phrase(syn);
                if let Some(&other) = by_phrase.get(&key) {
                    assert_eq!(
                        other, idx,
                        "synonym `{syn}` maps to two metrics in metrics.toml"
                    );
                }
                by_phrase.insert(key, idx);
            }
            metrics.push(MetricDef {
                id: entry.id,
                statement,
                unit: entry.unit,
                synonyms: entry.synonyms,
            });
        }
        Vocabulary {
            version: file.version,
            metrics,
            by_id,
            by_phrase,
        }
    }

    /// Shared vocabulary instance.
    pub fn get() -> &'static Vocabulary {
        static VOCAB: OnceLock<Vocabulary> = OnceLock::new();
        VOCAB.get_or_init(Vocabulary::load)
    }

    pub fn metrics(&self) -> &[MetricDef] {
        &self.metrics
    }

    /// Exact metric id lookup, as used at ingestion.
    pub fn by_id(&self, id: &str) -> Option<&MetricDef> {
        self.by_id.get(id).map(|&i| &self.metrics[i])
    }

    /// Normalized phrase lookup covering ids and synonyms, as used when
    /// validating model-supplied metric arguments.
    pub fn resolve_phrase(&self, phrase: &str) -> Option<&MetricDef> {
        self.by_phrase
            .get(&normalize_phrase(phrase))
            .map(|&i| &self.metrics[i])
    }

    /// Metric ids belonging to one statement, in vocabulary order.
    pub fn statement_metrics(&self, kind: StatementKind) -> Vec<&MetricDef> {
        self.metrics
            .iter()
            .filter(|m| m.statement == kind)
            .collect()
    }
}

/// Lowercase, fold punctuation to spaces, collapse runs. `R&D expense`
/// and `r d expense` normalize identically.
pub fn normalize_phrase(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut last_space = true;
    for c in s.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
            last_space = false;
        } else if c == '_' || !last_space {
            // underscores and punctuation both act as separators
            if !last_space {
                out.push(' ');
                last_space = true;
            }
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_loads_and_indexes() {
        let v = Vocabulary::get();
        assert_eq!(v.version, 1);
        assert!(v.metrics().len() >= 17);
        assert!(v.by_id("revenue").is_some());
        assert!(v.by_id("ebitda_adjusted_custom").is_none());
    }

    #[test]
    fn synonyms_resolve_to_vocabulary_metrics() {
        let v = Vocabulary::get();
        assert_eq!(v.resolve_phrase("total asset").unwrap().id, "total_assets");
        assert_eq!(v.resolve_phrase("R&D expense").unwrap().id, "rnd_expense");
        assert_eq!(v.resolve_phrase("SG&A expense").unwrap().id, "sgna_expense");
        assert_eq!(v.resolve_phrase("EPS (diluted)").unwrap().id, "eps_diluted");
        assert_eq!(v.resolve_phrase("net_income").unwrap().id, "net_income");
        assert!(v.resolve_phrase("moat score").is_none());
    }

    #[test]
    fn statement_assignment_partitions_vocabulary() {
        let v = Vocabulary::get();
        let income = v.statement_metrics(StatementKind::IncomeStatement).len();
        let balance = v.statement_metrics(StatementKind::BalanceSheet).len();
        let cash = v.statement_metrics(StatementKind::CashFlow).len();
        assert_eq!(income + balance + cash, v.metrics().len());
        assert!(balance >= 3 && cash >= 3);
    }

    #[test]
    fn phrase_normalization_is_idempotent() {
        for s in ["R&D expense", "EPS  (diluted)", "net_income", "  sales "] {
            let once = normalize_phrase(s);
            assert_eq!(normalize_phrase(&once), once);
        }
    }
}
