//! The assistant loop: route a natural-language question through the model
//! to a linking function, execute it, feed the table back, and return the
//! final answer with full trace and cost accounting.

use std::time::{Duration, Instant};

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::library::{QueryLibrary, ResultTable};
use crate::protocol::{
    parse_tool_calls, ChatBackend, ChatMessage, ChatRequest, RateCard, RateCardError, TokenUsage,
    ToolChoice,
};
use crate::store::Store;

const SYSTEM_PROMPT: &str = "You are a financial data assistant. Answer questions about market and \
fundamental data by calling the provided functions; never invent values. After a function \
returns, report its values to the user.";

/// How a failed case is classified downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureClass {
    NoToolCall,
    MalformedToolCall,
    InvalidArguments,
    ExecutionError,
    Protocol,
    RoundLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum AnswerOutcome {
    Answered,
    Failed {
        class: FailureClass,
        message: String,
    },
}

impl AnswerOutcome {
    pub fn is_answered(&self) -> bool {
        matches!(self, AnswerOutcome::Answered)
    }
}

/// One step of the answer loop.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum TraceStep {
    ModelCall {
        round: usize,
        usage: TokenUsage,
        tool_calls: usize,
        #[serde(serialize_with = "ser_millis")]
        latency: Duration,
    },
    ToolExecution {
        function: String,
        ok: bool,
        detail: String,
        #[serde(serialize_with = "ser_millis")]
        latency: Duration,
    },
}

fn ser_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

impl TraceStep {
    pub fn latency(&self) -> Duration {
        match self {
            TraceStep::ModelCall { latency, .. } => *latency,
            TraceStep::ToolExecution { latency, .. } => *latency,
        }
    }

    /// Copy with zeroed latency, for determinism comparisons.
    pub fn without_timing(&self) -> TraceStep {
        let mut step = self.clone();
        match &mut step {
            TraceStep::ModelCall { latency, .. } => *latency = Duration::ZERO,
            TraceStep::ToolExecution { latency, .. } => *latency = Duration::ZERO,
        }
        step
    }
}

/// Session totals; `wall_time` wraps the whole loop.
#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub usage: TokenUsage,
    pub cost: Decimal,
    #[serde(serialize_with = "ser_millis")]
    pub wall_time: Duration,
}

/// Everything one `answer` call produced.
#[derive(Debug, Clone, Serialize)]
pub struct AnswerResult {
    pub question: String,
    pub outcome: AnswerOutcome,
    pub final_answer: String,
    pub tables: Vec<ResultTable>,
    pub trace: Vec<TraceStep>,
    pub totals: Totals,
}

#[derive(Debug, Clone)]
pub struct AssistantConfig {
    pub model: String,
    pub max_tool_rounds: usize,
    pub temperature: Option<f64>,
}

impl AssistantConfig {
    pub fn new(model: impl Into<String>) -> AssistantConfig {
        AssistantConfig {
            model: model.into(),
            max_tool_rounds: 3,
            temperature: Some(0.0),
        }
    }
}

/// The assistant: stateless across questions, shareable across threads.
pub struct Assistant<'a> {
    backend: &'a dyn ChatBackend,
    store: &'a Store,
    library: &'a QueryLibrary,
    rate_card: &'a RateCard,
    config: AssistantConfig,
}

impl<'a> Assistant<'a> {
    pub fn new(
        backend: &'a dyn ChatBackend,
        store: &'a Store,
        library: &'a QueryLibrary,
        rate_card: &'a RateCard,
        config: AssistantConfig,
    ) -> Result<Assistant<'a>, RateCardError> {
        if rate_card.rates(&config.model).is_none() {
            return Err(RateCardError::UnknownModel(config.model.clone()));
        }
        Ok(Assistant {
            backend,
            store,
            library,
            rate_card,
            config,
        })
    }

    /// Answer one question. Failures come back as classified outcomes with
    /// the trace intact; arguments never reach the store unvalidated.
    pub fn answer(&self, question: &str) -> AnswerResult {
        let started = Instant::now();
        let mut messages = vec![
            ChatMessage::system(SYSTEM_PROMPT),
            ChatMessage::user(question),
        ];
        let mut trace: Vec<TraceStep> = Vec::new();
        let mut tables: Vec<ResultTable> = Vec::new();
        let mut usage = TokenUsage::default();
        let mut correction_used = false;

        let finish = |outcome: AnswerOutcome,
                      final_answer: String,
                      tables: Vec<ResultTable>,
                      trace: Vec<TraceStep>,
                      usage: TokenUsage| {
            let cost = self
                .rate_card
                .cost(&self.config.model, usage)
                .expect("rates checked at construction");
            AnswerResult {
                question: question.to_string(),
                outcome,
                final_answer,
                tables,
                trace,
                totals: Totals {
                    usage,
                    cost,
                    wall_time: started.elapsed(),
                },
            }
        };

        for round in 1..=self.config.max_tool_rounds {
            let request = ChatRequest {
                model: self.config.model.clone(),
                messages: messages.clone(),
                tools: self.library.to_tool_specs(),
                tool_choice: ToolChoice::Auto,
                temperature: self.config.temperature,
            };
            let completion = match self.backend.chat_complete(&request) {
                Ok(c) => c,
                Err(e) => {
                    return finish(
                        AnswerOutcome::Failed {
                            class: FailureClass::Protocol,
                            message: e.to_string(),
                        },
                        String::new(),
                        tables,
                        trace,
                        usage,
                    )
                }
            };
            usage += completion.usage;
            trace.push(TraceStep::ModelCall {
                round,
                usage: completion.usage,
                tool_calls: completion.tool_calls.len(),
                latency: completion.latency,
            });

            if completion.tool_calls.is_empty() {
                let content = completion.content.unwrap_or_default();
                if tables.is_empty() {
                    return finish(
                        AnswerOutcome::Failed {
                            class: FailureClass::NoToolCall,
                            message: format!("model answered in prose: {content}"),
                        },
                        content,
                        tables,
                        trace,
                        usage,
                    );
                }
                let final_answer = compose_final_answer(&content, &tables);
                return finish(AnswerOutcome::Answered, final_answer, tables, trace, usage);
            }

            let raw_calls = completion.tool_calls;
            messages.push(ChatMessage::assistant_tool_calls(raw_calls.clone()));

            let parsed = match parse_tool_calls(&raw_calls) {
                Ok(p) => p,
                Err(e) => {
                    // Answer every pending call id so the conversation stays
                    // well-formed, then give the model one correction chance.
                    for call in &raw_calls {
                        messages.push(ChatMessage::tool(&call.id, format!("error: {e}")));
                    }
                    trace.push(TraceStep::ToolExecution {
                        function: raw_calls
                            .first()
                            .map(|c| c.name.clone())
                            .unwrap_or_default(),
                        ok: false,
                        detail: e.to_string(),
                        latency: Duration::ZERO,
                    });
                    if correction_used {
                        return finish(
                            AnswerOutcome::Failed {
                                class: FailureClass::MalformedToolCall,
                                message: e.to_string(),
                            },
                            String::new(),
                            tables,
                            trace,
                            usage,
                        );
                    }
                    correction_used = true;
                    continue;
                }
            };

            let mut round_failure: Option<(FailureClass, String)> = None;
            for call in parsed {
                let step_started = Instant::now();
                let executed = self
                    .library
                    .validate_args(&call.name, &call.arguments)
                    .map_err(|e| (FailureClass::InvalidArguments, e.to_string()))
                    .and_then(|validated| {
                        self.library
                            .execute(&validated, self.store)
                            .map_err(|e| (FailureClass::ExecutionError, e.to_string()))
                    });
                match executed {
                    Ok(table) => {
                        let payload = serde_json::to_string(&json!({
                            "columns": table.columns,
                            "rows": table.rows,
                            "row_count": table.row_count,
                        }))
                        .expect("tables serialize");
                        trace.push(TraceStep::ToolExecution {
                            function: call.name.clone(),
                            ok: true,
                            detail: format!("{} rows", table.row_count),
                            latency: step_started.elapsed(),
                        });
                        messages.push(ChatMessage::tool(&call.id, payload));
                        tables.push(table);
                    }
                    Err((class, message)) => {
                        trace.push(TraceStep::ToolExecution {
                            function: call.name.clone(),
                            ok: false,
                            detail: message.clone(),
                            latency: step_started.elapsed(),
                        });
                        messages.push(ChatMessage::tool(&call.id, format!("error: {message}")));
                        if round_failure.is_none() {
                            round_failure = Some((class, message));
                        }
                    }
                }
            }

            if let Some((class, message)) = round_failure {
                if correction_used {
                    return finish(
                        AnswerOutcome::Failed { class, message },
                        String::new(),
                        tables,
                        trace,
                        usage,
                    );
                }
                correction_used = true;
            }
        }

        finish(
            AnswerOutcome::Failed {
                class: FailureClass::RoundLimit,
                message: format!(
                    "no final answer after {} model calls",
                    self.config.max_tool_rounds
                ),
            },
            String::new(),
            tables,
            trace,
            usage,
        )
    }
}

/// The final answer always carries the executed tables verbatim in a
/// machine-readable block, so downstream judging never parses prose.
pub fn compose_final_answer(model_text: &str, tables: &[ResultTable]) -> String {
    let block =
        serde_json::to_string_pretty(&json!({ "tables": tables })).expect("tables serialize");
    format!("{model_text}\n\n```finq-result\n{block}\n```")
}

// ---------------------------------------------------------------------------
// Judging
// ---------------------------------------------------------------------------

/// Oracle answer for one case, computed directly against the store.
#[derive(Debug, Clone)]
pub struct ExpectedResult {
    pub ticker: String,
    pub table: ResultTable,
    /// Columns whose values must be returned correctly and completely.
    pub key_columns: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JudgeVerdict {
    Success,
    WrongEntity,
    WrongCount,
    WrongValues,
    NoToolCall,
    Error,
}

impl JudgeVerdict {
    pub fn is_success(&self) -> bool {
        matches!(self, JudgeVerdict::Success)
    }
}

/// Success iff the returned table matches the oracle in values, count, and
/// entity; otherwise a failure class.
pub fn judge_success(expected: &ExpectedResult, result: &AnswerResult) -> JudgeVerdict {
    if let AnswerOutcome::Failed { class, .. } = &result.outcome {
        return match class {
            FailureClass::NoToolCall => JudgeVerdict::NoToolCall,
            _ => JudgeVerdict::Error,
        };
    }
    let Some(table) = result.tables.last() else {
        return JudgeVerdict::Error;
    };
    judge_table(expected, table)
}

/// Table-level comparison, shared with the text-to-SQL path.
pub fn judge_table(expected: &ExpectedResult, table: &ResultTable) -> JudgeVerdict {
    if table.row_count != expected.table.row_count {
        return JudgeVerdict::WrongCount;
    }
    if let Some(col) = table.column("ticker") {
        let all_expected = table
            .rows
            .iter()
            .all(|row| row[col].canonical() == expected.ticker);
        if !all_expected {
            return JudgeVerdict::WrongEntity;
        }
    }
    for (i, expected_row) in expected.table.rows.iter().enumerate() {
        let row = &table.rows[i];
        for key in &expected.key_columns {
            let j = expected
                .table
                .column(key)
                .expect("key columns exist in the oracle table");
            let want = expected_row[j].canonical();
            let ok = match table.column(key) {
                Some(k) => row.get(k).map(|c| c.canonical() == want).unwrap_or(false),
                // Column names differ across systems; fall back to cell
                // membership within the row.
                None => row.iter().any(|c| c.canonical() == want),
            };
            if !ok {
                return JudgeVerdict::WrongValues;
            }
        }
    }
    JudgeVerdict::Success
}
