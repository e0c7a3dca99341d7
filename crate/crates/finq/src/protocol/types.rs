//! Protocol domain types shared by the live and mock backends.

use std::ops::{Add, AddAssign};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

/// One chat message. Tool results reference the call they answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<RawToolCall>,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::System,
            content: content.into(),
            tool_call_id: None,
            tool_calls: Vec::new(),
        }
    }

    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::User,
            content: content.into(),
            tool_call_id: None,
            tool_calls: Vec::new(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
            tool_call_id: None,
            tool_calls: Vec::new(),
        }
    }

    pub fn assistant_tool_calls(calls: Vec<RawToolCall>) -> ChatMessage {
        ChatMessage {
            role: Role::Assistant,
            content: String::new(),
            tool_call_id: None,
            tool_calls: calls,
        }
    }

    pub fn tool(call_id: impl Into<String>, content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: Role::Tool,
            content: content.into(),
            tool_call_id: Some(call_id.into()),
            tool_calls: Vec::new(),
        }
    }
}

/// Machine-readable function schema advertised to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub parameters: Value,
}

/// A tool call exactly as it appears on the wire: arguments still a string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawToolCall {
    pub id: String,
    pub name: String,
    pub arguments: String,
}

/// A tool call whose argument string parsed into a document.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolCallRequest {
    pub id: String,
    pub name: String,
    pub arguments: Value,
}

/// Parse wire tool calls into structured requests. An unparseable argument
/// string is model misbehavior and surfaces as `MalformedToolCall`.
pub fn parse_tool_calls(raw: &[RawToolCall]) -> Result<Vec<ToolCallRequest>, ProtocolError> {
    raw.iter()
        .map(|call| {
            let arguments: Value = serde_json::from_str(&call.arguments).map_err(|e| {
                ProtocolError::MalformedToolCall(format!(
                    "tool call `{}` arguments did not parse: {e}",
                    call.name
                ))
            })?;
            Ok(ToolCallRequest {
                id: call.id.clone(),
                name: call.name.clone(),
                arguments,
            })
        })
        .collect()
}

/// Input/output token counts for one call or one session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl TokenUsage {
    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> TokenUsage {
        TokenUsage {
            prompt_tokens,
            completion_tokens,
        }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage {
            prompt_tokens: self.prompt_tokens + rhs.prompt_tokens,
            completion_tokens: self.completion_tokens + rhs.completion_tokens,
        }
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

/// Running usage totals for one experiment worker.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageSession {
    pub totals: TokenUsage,
    pub calls: u64,
}

impl UsageSession {
    pub fn accumulate(&mut self, usage: TokenUsage) -> TokenUsage {
        self.totals += usage;
        self.calls += 1;
        self.totals
    }
}

/// Result of one model invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub content: Option<String>,
    pub tool_calls: Vec<RawToolCall>,
    pub usage: TokenUsage,
    pub latency: Duration,
}

/// Whether the model may/must call a tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ToolChoice {
    #[default]
    Auto,
    None,
    Required,
}

/// One request to a chat backend.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub tools: Vec<ToolSpec>,
    pub tool_choice: ToolChoice,
    /// Deterministic-most setting by default.
    pub temperature: Option<f64>,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model: model.into(),
            messages,
            tools: Vec::new(),
            tool_choice: ToolChoice::Auto,
            temperature: Some(0.0),
        }
    }

    pub fn with_tools(mut self, tools: Vec<ToolSpec>) -> ChatRequest {
        self.tools = tools;
        self
    }
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned status {0}: {1}")]
    Status(u16, String),
    #[error("malformed response body: {0}")]
    MalformedBody(String),
    #[error("malformed tool call: {0}")]
    MalformedToolCall(String),
    #[error("request timed out")]
    Timeout,
    #[error("mock script has no entry matching: {0}")]
    ScriptMiss(String),
    #[error("backend configuration error: {0}")]
    Config(String),
}

/// A chat-completions backend: live HTTP or deterministic mock.
pub trait ChatBackend: Send + Sync {
    fn chat_complete(&self, request: &ChatRequest) -> Result<CompletionResult, ProtocolError>;
}

/// Free-function form mirroring the operation surface.
pub fn chat_complete(
    backend: &dyn ChatBackend,
    request: &ChatRequest,
) -> Result<CompletionResult, ProtocolError> {
    if request.messages.is_empty() {
        return Err(ProtocolError::Config("messages must be non-empty".into()));
    }
    backend.chat_complete(request)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_accumulates_exactly() {
        let mut session = UsageSession::default();
        assert_eq!(
            session.accumulate(TokenUsage::new(100, 20)),
            TokenUsage::new(100, 20)
        );
        assert_eq!(
            session.accumulate(TokenUsage::new(50, 5)),
            TokenUsage::new(150, 25)
        );
        assert_eq!(session.calls, 2);
    }

    #[test]
    fn zero_tool_calls_parse_to_empty_list() {
        assert!(parse_tool_calls(&[]).unwrap().is_empty());
    }

    #[test]
    fn literal_arguments_parse() {
        let calls = vec![RawToolCall {
            id: "call_1".into(),
            name: "get_stock_price".into(),
            arguments: r#"{"ticker":"NVDA","n_days":10}"#.into(),
        }];
        let parsed = parse_tool_calls(&calls).unwrap();
        assert_eq!(parsed[0].arguments["ticker"], "NVDA");
        assert_eq!(parsed[0].arguments["n_days"], 10);
    }

    #[test]
    fn truncated_arguments_are_malformed() {
        let calls = vec![RawToolCall {
            id: "call_1".into(),
            name: "get_stock_price".into(),
            arguments: r#"{"ticker": "NVDA"#.into(),
        }];
        assert!(matches!(
            parse_tool_calls(&calls),
            Err(ProtocolError::MalformedToolCall(_))
        ));
    }
}
