//! Company-name → ticker mapping: the deterministic local registry path
//! used by the linking functions, and the LLM path evaluated in the
//! ticker-coverage experiment.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{ChatBackend, ChatMessage, ChatRequest, ProtocolError, TokenUsage};
use crate::store::{Store, StoreError};
use crate::vocab::normalize_phrase;

/// Fixed prompt wording for the ticker-coverage run, kept in a fixture
/// file for reproducibility.
pub const RQ2_PROMPT_TEMPLATE: &str = include_str!("../data/rq2_prompt.txt");

#[derive(Debug, Error)]
pub enum ResolveError {
    #[error("unknown company `{0}`")]
    UnknownCompany(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Exact or alias match against the registry, case-insensitive with
/// punctuation folded. No fuzzy guessing.
pub fn resolve_local(store: &Store, name: &str) -> Result<String, ResolveError> {
    let key = normalize_phrase(name);
    if key.is_empty() {
        return Err(ResolveError::UnknownCompany(name.to_string()));
    }
    store
        .ticker_for_name(&key)?
        .ok_or_else(|| ResolveError::UnknownCompany(name.to_string()))
}

/// Resolve a tool argument that may be a ticker or a company name: known
/// tickers win, then the registry.
pub fn resolve_entity(store: &Store, entity: &str) -> Result<String, StoreError> {
    let candidate = entity.trim().to_ascii_uppercase();
    let plausible_symbol = !candidate.is_empty()
        && candidate.len() <= 10
        && candidate
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '-');
    if plausible_symbol {
        let known = store.query_template(
            "ticker_has_prices",
            &[("ticker", rusqlite::types::Value::Text(candidate.clone()))],
            |row| row.get::<_, i64>(0),
        )?;
        let has_prices = known.first().copied().unwrap_or(0) == 1;
        let has_fundamentals = {
            let rows = store.query_template(
                "ticker_has_fundamentals",
                &[("ticker", rusqlite::types::Value::Text(candidate.clone()))],
                |row| row.get::<_, i64>(0),
            )?;
            rows.first().copied().unwrap_or(0) == 1
        };
        if has_prices || has_fundamentals {
            return Ok(candidate);
        }
    }
    match resolve_local(store, entity) {
        Ok(ticker) => Ok(ticker),
        Err(_) => Err(StoreError::UnknownTicker(entity.to_string())),
    }
}

/// One LLM ticker answer, scored against the expected symbol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TickerAnswer {
    pub company: String,
    pub expected: String,
    pub raw: String,
    pub normalized: String,
    pub matched: bool,
    pub usage: TokenUsage,
}

fn ticker_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Z]{1,5}(-[A-Z])?$").expect("ticker pattern compiles"))
}

fn clean_token(token: &str) -> String {
    let inner = token.trim_matches(|c: char| !c.is_ascii_alphanumeric());
    inner
        .chars()
        .map(|c| if c == '.' { '-' } else { c })
        .filter(|c| c.is_ascii_alphanumeric() || *c == '-')
        .collect()
}

/// Normalize raw model output to a comparable ticker: strip wrapping
/// quotes/backticks, uppercase, unify `.`/`-` share-class separators to
/// `-`, and for multi-token chatter take the first already-uppercase token
/// shaped like a symbol. Idempotent.
pub fn normalize_ticker(raw: &str) -> String {
    let trimmed = raw
        .trim()
        .trim_matches(|c| matches!(c, '"' | '\'' | '`' | '\u{201c}' | '\u{201d}'))
        .trim();

    let tokens: Vec<&str> = trimmed.split_whitespace().collect();
    if tokens.len() <= 1 {
        return clean_token(trimmed).to_ascii_uppercase();
    }

    // Candidates must already be uppercase so prose words do not qualify.
    // "I" and "A" are real symbols but far more often English words; they
    // only win when nothing else matches.
    let mut stopword_candidate = String::new();
    let mut fallback = String::new();
    for token in &tokens {
        let cleaned = clean_token(token);
        if cleaned.is_empty() {
            continue;
        }
        if fallback.is_empty() {
            fallback = cleaned.to_ascii_uppercase();
        }
        if ticker_pattern().is_match(&cleaned) {
            if cleaned == "I" || cleaned == "A" {
                if stopword_candidate.is_empty() {
                    stopword_candidate = cleaned;
                }
            } else {
                return cleaned;
            }
        }
    }
    if !stopword_candidate.is_empty() {
        return stopword_candidate;
    }
    fallback
}

/// Render the fixed prompt for one company.
pub fn rq2_prompt(template: &str, company_name: &str) -> String {
    template.replace("{company_name}", company_name)
}

/// Ask the model for one ticker and score the normalized answer.
pub fn resolve_via_llm(
    backend: &dyn ChatBackend,
    model: &str,
    prompt_template: &str,
    company: &str,
    expected: &str,
) -> Result<TickerAnswer, ProtocolError> {
    let request = ChatRequest::new(
        model,
        vec![ChatMessage::user(rq2_prompt(prompt_template, company))],
    );
    let completion = backend.chat_complete(&request)?;
    let raw = completion.content.unwrap_or_default();
    let normalized = normalize_ticker(&raw);
    let expected_norm = normalize_ticker(expected);
    Ok(TickerAnswer {
        company: company.to_string(),
        expected: expected.to_string(),
        matched: !normalized.is_empty() && normalized == expected_norm,
        raw,
        normalized,
        usage: completion.usage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{Matcher, MockBackend, ScriptEntry, ScriptedResponse};

    fn registry_store() -> Store {
        let store = Store::in_memory().unwrap();
        let csv = "\
ticker,name,aliases,index_memberships
NVDA,NVIDIA Corporation,NVIDIA|Nvidia Corp,SP500:2001-11-30:
KO,The Coca-Cola Company,Coca-Cola|Coca Cola,SP500:1957-03-04:
";
        store.ingest_companies(csv.as_bytes()).unwrap();
        store
    }

    #[test]
    fn exact_and_alias_lookups_resolve() {
        let store = registry_store();
        assert_eq!(resolve_local(&store, "NVIDIA Corporation").unwrap(), "NVDA");
        assert_eq!(resolve_local(&store, "nvidia").unwrap(), "NVDA");
        assert_eq!(resolve_local(&store, "Coca-Cola").unwrap(), "KO");
        assert!(matches!(
            resolve_local(&store, "Acme Widgets"),
            Err(ResolveError::UnknownCompany(_))
        ));
    }

    #[test]
    fn normalization_handles_class_shares_and_chatter() {
        assert_eq!(normalize_ticker("NVDA"), "NVDA");
        assert_eq!(normalize_ticker("brk.b"), "BRK-B");
        assert_eq!(normalize_ticker("\"BRK-B\""), "BRK-B");
        assert_eq!(normalize_ticker("`nvda`"), "NVDA");
        assert_eq!(normalize_ticker("I think it is NVDA."), "NVDA");
        assert_eq!(normalize_ticker(""), "");
    }

    #[test]
    fn normalization_is_idempotent() {
        for raw in [
            "NVDA",
            "brk.b",
            "I think it is NVDA.",
            "absolutely unparseable answer",
            "",
        ] {
            let once = normalize_ticker(raw);
            assert_eq!(normalize_ticker(&once), once, "{raw:?}");
        }
    }

    #[test]
    fn llm_resolution_scores_after_normalization() {
        let mock = MockBackend::new(vec![
            ScriptEntry {
                matcher: Matcher::Contains("NVIDIA".into()),
                respond: ScriptedResponse::Text("NVDA".into()),
                usage: None,
            },
            ScriptEntry {
                matcher: Matcher::Contains("Berkshire".into()),
                respond: ScriptedResponse::Text("brk.b".into()),
                usage: None,
            },
            ScriptEntry {
                matcher: Matcher::Contains("Acme".into()),
                respond: ScriptedResponse::Text("no idea, sorry, cannot tell".into()),
                usage: None,
            },
        ]);
        let a = resolve_via_llm(
            &mock,
            "m",
            RQ2_PROMPT_TEMPLATE,
            "NVIDIA Corporation",
            "NVDA",
        )
        .unwrap();
        assert!(a.matched);
        let b = resolve_via_llm(
            &mock,
            "m",
            RQ2_PROMPT_TEMPLATE,
            "Berkshire Hathaway",
            "BRK-B",
        )
        .unwrap();
        assert!(b.matched, "share-class separators unify: {b:?}");
        let c = resolve_via_llm(&mock, "m", RQ2_PROMPT_TEMPLATE, "Acme Widgets", "ACME").unwrap();
        assert!(!c.matched);
    }

    #[test]
    fn entity_resolution_prefers_known_tickers() {
        let store = registry_store();
        let prices = "\
ticker,date,open,high,low,close,adj_close,volume
KO,2024-01-02,59.10,59.90,58.75,59.50,59.50,12000000
";
        store.ingest_prices(prices.as_bytes()).unwrap();
        assert_eq!(resolve_entity(&store, "ko").unwrap(), "KO");
        assert_eq!(resolve_entity(&store, "Coca-Cola").unwrap(), "KO");
        assert!(matches!(
            resolve_entity(&store, "Acme Widgets"),
            Err(StoreError::UnknownTicker(_))
        ));
    }
}
