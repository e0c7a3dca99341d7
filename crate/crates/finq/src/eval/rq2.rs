//! Ticker-coverage study: ask the model for each constituent's symbol and
//! score exact (normalized) retrieval, for the latest constituents and for
//! the subset whose membership predates the knowledge cutoff.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{ChatBackend, ProtocolError, TokenUsage};
use crate::resolver::{resolve_via_llm, TickerAnswer};
use crate::store::{IndexId, Store, StoreError};

#[derive(Debug, Error)]
pub enum Rq2Error {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("index {0} has no current constituents in the registry")]
    EmptyIndex(IndexId),
}

/// One constituent of the evaluation set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Constituent {
    pub ticker: String,
    pub name: String,
    pub member_since: NaiveDate,
}

/// Current members of one index: intervals with no end date.
pub fn latest_constituents(store: &Store, index: IndexId) -> Result<Vec<Constituent>, Rq2Error> {
    let mut out: Vec<Constituent> = store
        .index_members(index)?
        .into_iter()
        .filter(|(_, _, m)| m.end.is_none())
        .map(|(ticker, name, m)| Constituent {
            ticker,
            name,
            member_since: m.start,
        })
        .collect();
    out.sort_by(|a, b| a.ticker.cmp(&b.ticker));
    out.dedup_by(|a, b| a.ticker == b.ticker);
    if out.is_empty() {
        return Err(Rq2Error::EmptyIndex(index));
    }
    Ok(out)
}

/// Accuracy over one subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetReport {
    pub label: String,
    pub total: usize,
    pub matches: usize,
    pub accuracy: f64,
}

fn subset_report(label: &str, answers: &[&TickerAnswer]) -> SubsetReport {
    let matches = answers.iter().filter(|a| a.matched).count();
    SubsetReport {
        label: label.to_string(),
        total: answers.len(),
        matches,
        accuracy: if answers.is_empty() {
            0.0
        } else {
            matches as f64 / answers.len() as f64
        },
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rq2Report {
    pub model: String,
    pub index: IndexId,
    pub cutoff: Option<NaiveDate>,
    pub latest: SubsetReport,
    pub pre_cutoff: Option<SubsetReport>,
    pub usage: TokenUsage,
    pub answers: Vec<TickerAnswer>,
}

/// Ask once per company using the fixed prompt (on up to `workers`
/// threads), then aggregate both subsets. Accuracy is a set property,
/// independent of evaluation order.
pub fn run_rq2(
    backend: &dyn ChatBackend,
    model: &str,
    store: &Store,
    index: IndexId,
    cutoff: Option<NaiveDate>,
    prompt_template: &str,
    workers: usize,
) -> Result<Rq2Report, Rq2Error> {
    let constituents = latest_constituents(store, index)?;
    let resolved = super::workers::parallel_map(&constituents, workers, |constituent| {
        resolve_via_llm(
            backend,
            model,
            prompt_template,
            &constituent.name,
            &constituent.ticker,
        )
    });
    let mut answers = Vec::with_capacity(constituents.len());
    let mut usage = TokenUsage::default();
    for answer in resolved {
        let answer = answer?;
        usage += answer.usage;
        answers.push(answer);
    }

    let all: Vec<&TickerAnswer> = answers.iter().collect();
    let latest = subset_report("latest", &all);
    let pre_cutoff = cutoff.map(|cut| {
        let subset: Vec<&TickerAnswer> = answers
            .iter()
            .zip(&constituents)
            .filter(|(_, c)| c.member_since < cut)
            .map(|(a, _)| a)
            .collect();
        subset_report("knowledge_cutoff", &subset)
    });

    Ok(Rq2Report {
        model: model.to_string(),
        index,
        cutoff,
        latest,
        pre_cutoff,
        usage,
        answers,
    })
}

/// Script every company to the right answer (used by the offline demo).
pub fn perfect_mock_script(
    store: &Store,
    index: IndexId,
) -> Result<Vec<crate::protocol::ScriptEntry>, Rq2Error> {
    use crate::protocol::{Matcher, ScriptEntry, ScriptedResponse};
    Ok(latest_constituents(store, index)?
        .into_iter()
        .map(|c| ScriptEntry {
            matcher: Matcher::Contains(c.name.clone()),
            respond: ScriptedResponse::Text(c.ticker),
            usage: None,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{Matcher, MockBackend, ScriptEntry, ScriptedResponse};
    use crate::resolver::RQ2_PROMPT_TEMPLATE;

    fn store_with_ten() -> Store {
        let store = Store::in_memory().unwrap();
        let mut csv = String::from("ticker,name,aliases,index_memberships\n");
        for i in 0..10 {
            // Two late additions (i = 8, 9) joined after 2024-06-01.
            let start = if i >= 8 {
                "2024-09-23"
            } else {
                "2015-03-0\u{31}"
            };
            csv.push_str(&format!("T{i:02},Test Company {i:02},,SP500:{start}:\n"));
        }
        store.ingest_companies(csv.as_bytes()).unwrap();
        store
    }

    fn mock_with_one_miss() -> MockBackend {
        let mut entries: Vec<ScriptEntry> = (0..10)
            .map(|i| ScriptEntry {
                matcher: Matcher::Contains(format!("Test Company {i:02}")),
                respond: ScriptedResponse::Text(if i == 3 {
                    "WRONGX".to_string()
                } else {
                    format!("T{i:02}")
                }),
                usage: Some(TokenUsage::new(25, 2)),
            })
            .collect();
        entries.reverse(); // order within the script must not matter
        MockBackend::new(entries)
    }

    #[test]
    fn nine_of_ten_scores_point_nine() {
        let store = store_with_ten();
        let mock = mock_with_one_miss();
        let report = run_rq2(
            &mock,
            "mock-model",
            &store,
            IndexId::Sp500,
            Some(NaiveDate::from_ymd_opt(2024, 6, 1).unwrap()),
            RQ2_PROMPT_TEMPLATE,
            3,
        )
        .unwrap();
        assert_eq!(report.latest.total, 10);
        assert_eq!(report.latest.matches, 9);
        assert!((report.latest.accuracy - 0.9).abs() < 1e-12);

        // The two post-cutoff additions drop out of the denominator.
        let pre = report.pre_cutoff.unwrap();
        assert_eq!(pre.total, 8);
        assert_eq!(pre.matches, 7);
        assert!((pre.accuracy - 7.0 / 8.0).abs() < 1e-12);

        assert_eq!(report.usage, TokenUsage::new(250, 20));
    }

    #[test]
    fn all_correct_scores_one() {
        let store = store_with_ten();
        let script = perfect_mock_script(&store, IndexId::Sp500).unwrap();
        let mock = MockBackend::new(script);
        let report = run_rq2(
            &mock,
            "mock-model",
            &store,
            IndexId::Sp500,
            None,
            RQ2_PROMPT_TEMPLATE,
            1,
        )
        .unwrap();
        assert_eq!(report.latest.accuracy, 1.0);
        assert!(report.pre_cutoff.is_none());
    }
}
