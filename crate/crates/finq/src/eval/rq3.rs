//! End-to-end benchmark: function calling versus text-to-SQL on the same
//! suite, judged by the same store-level oracle, with cost and latency
//! accounting per case.

use std::str::FromStr;
use std::time::Instant;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::suite::{oracle_expected, CaseSpec, SuiteError};
use crate::baseline::{build_schema_prompt, extract_sql, sandbox_execute, SandboxLimits};
use crate::library::QueryLibrary;
use crate::protocol::{ChatBackend, ChatMessage, ChatRequest, RateCard, RateCardError, TokenUsage};
use crate::router::{judge_success, judge_table, Assistant, AssistantConfig, JudgeVerdict};
use crate::store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    FunctionCalling,
    TextToSql,
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SystemKind::FunctionCalling => write!(f, "function_calling"),
            SystemKind::TextToSql => write!(f, "text_to_sql"),
        }
    }
}

impl FromStr for SystemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "function_calling" | "fc" => Ok(SystemKind::FunctionCalling),
            "text_to_sql" | "t2s" | "sql" => Ok(SystemKind::TextToSql),
            other => Err(format!("unknown system `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum Rq3Error {
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    RateCard(#[from] RateCardError),
}

/// Outcome of one (case, system) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCaseResult {
    pub case_index: usize,
    pub question: String,
    pub system: SystemKind,
    pub verdict: JudgeVerdict,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_detail: Option<String>,
    /// Linking function taken, or `text_to_sql`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    pub latency_ms: f64,
    pub cost: Decimal,
    pub usage: TokenUsage,
}

/// Streamed aggregates for one system, folded in case order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemAggregates {
    pub system: SystemKind,
    pub cases: usize,
    pub successes: usize,
    pub accuracy: f64,
    pub total_cost: Decimal,
    pub mean_cost: f64,
    pub std_cost: f64,
    pub mean_latency_ms: f64,
    pub std_latency_ms: f64,
    pub usage: TokenUsage,
}

/// Recompute aggregates from per-case records with the same deterministic
/// single-threaded fold the runner uses.
pub fn aggregate(system: SystemKind, results: &[BenchCaseResult]) -> SystemAggregates {
    let mut n = 0usize;
    let mut successes = 0usize;
    let mut total_cost = Decimal::ZERO;
    let mut usage = TokenUsage::default();
    let mut cost_sum = 0.0f64;
    let mut cost_sumsq = 0.0f64;
    let mut lat_sum = 0.0f64;
    let mut lat_sumsq = 0.0f64;
    for r in results.iter().filter(|r| r.system == system) {
        n += 1;
        if r.success {
            successes += 1;
        }
        total_cost += r.cost;
        usage += r.usage;
        let c: f64 = r.cost.to_string().parse().expect("decimal renders as f64");
        cost_sum += c;
        cost_sumsq += c * c;
        lat_sum += r.latency_ms;
        lat_sumsq += r.latency_ms * r.latency_ms;
    }
    let nf = n as f64;
    let sample_std = |sum: f64, sumsq: f64| {
        if n < 2 {
            0.0
        } else {
            ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0).sqrt()
        }
    };
    SystemAggregates {
        system,
        cases: n,
        successes,
        accuracy: if n == 0 { 0.0 } else { successes as f64 / nf },
        total_cost,
        mean_cost: if n == 0 { 0.0 } else { cost_sum / nf },
        std_cost: sample_std(cost_sum, cost_sumsq),
        mean_latency_ms: if n == 0 { 0.0 } else { lat_sum / nf },
        std_latency_ms: sample_std(lat_sum, lat_sumsq),
        usage,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rq3Report {
    pub model: String,
    pub suite_cases: usize,
    pub systems: Vec<SystemAggregates>,
    pub cases: Vec<BenchCaseResult>,
}

/// Run every case through the selected systems against one backend.
/// `self_correct` grants the text-to-SQL system extra generation attempts
/// after SQL errors; headline runs keep it at zero.
#[allow(clippy::too_many_arguments)]
pub fn run_rq3(
    store: &Store,
    library: &QueryLibrary,
    backend: &dyn ChatBackend,
    model: &str,
    rate_card: &RateCard,
    cases: &[CaseSpec],
    systems: &[SystemKind],
    limits: SandboxLimits,
    self_correct: usize,
) -> Result<Rq3Report, Rq3Error> {
    let mut results: Vec<BenchCaseResult> = Vec::new();

    for &system in systems {
        match system {
            SystemKind::FunctionCalling => {
                let assistant = Assistant::new(
                    backend,
                    store,
                    library,
                    rate_card,
                    AssistantConfig::new(model),
                )?;
                for case in cases {
                    let expected = oracle_expected(store, case)?;
                    let answer = assistant.answer(&case.question);
                    let verdict = judge_success(&expected, &answer);
                    let route = answer.tables.last().map(|t| t.function.clone());
                    let failure_detail = match &answer.outcome {
                        crate::router::AnswerOutcome::Failed { message, .. } => {
                            Some(message.clone())
                        }
                        _ if !verdict.is_success() => Some(format!("{verdict:?}")),
                        _ => None,
                    };
                    results.push(BenchCaseResult {
                        case_index: case.index,
                        question: case.question.clone(),
                        system,
                        verdict,
                        success: verdict.is_success(),
                        failure_detail,
                        route,
                        latency_ms: answer.totals.wall_time.as_secs_f64() * 1e3,
                        cost: answer.totals.cost,
                        usage: answer.totals.usage,
                    });
                }
            }
            SystemKind::TextToSql => {
                for case in cases {
                    let expected = oracle_expected(store, case)?;
                    let started = Instant::now();
                    let mut usage = TokenUsage::default();
                    let mut messages = vec![ChatMessage::user(build_schema_prompt(
                        Store::schema_description(),
                        &case.question,
                    ))];
                    let mut outcome: Result<JudgeVerdict, String> = Err("no attempt".to_string());
                    for _attempt in 0..=self_correct {
                        let request = ChatRequest::new(model, messages.clone());
                        match backend.chat_complete(&request) {
                            Ok(completion) => {
                                usage += completion.usage;
                                let text = completion.content.unwrap_or_default();
                                match extract_sql(&text)
                                    .and_then(|sql| sandbox_execute(&sql, store, limits))
                                {
                                    Ok(table) => {
                                        outcome = Ok(judge_table(&expected, &table));
                                        break;
                                    }
                                    Err(e) => {
                                        outcome = Err(e.to_string());
                                        messages.push(ChatMessage::assistant(text));
                                        messages.push(ChatMessage::user(format!(
                                            "That query failed: {e}. Write one corrected \
                                             SELECT statement."
                                        )));
                                    }
                                }
                            }
                            Err(e) => {
                                outcome = Err(e.to_string());
                                break;
                            }
                        }
                    }
                    let latency_ms = started.elapsed().as_secs_f64() * 1e3;
                    let cost = rate_card.cost(model, usage)?;
                    let (verdict, failure_detail) = match outcome {
                        Ok(verdict) => (
                            verdict,
                            (!verdict.is_success()).then(|| format!("{verdict:?}")),
                        ),
                        Err(message) => (JudgeVerdict::Error, Some(message)),
                    };
                    results.push(BenchCaseResult {
                        case_index: case.index,
                        question: case.question.clone(),
                        system,
                        verdict,
                        success: verdict.is_success(),
                        failure_detail,
                        route: Some("text_to_sql".into()),
                        latency_ms,
                        cost,
                        usage,
                    });
                }
            }
        }
    }

    let systems_report = systems
        .iter()
        .map(|&system| aggregate(system, &results))
        .collect();
    Ok(Rq3Report {
        model: model.to_string(),
        suite_cases: cases.len(),
        systems: systems_report,
        cases: results,
    })
}
