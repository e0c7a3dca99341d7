//! Deterministic scripted backend for offline runs and tests.
//!
//! A script is an ordered list of (matcher, response) pairs. The matcher
//! runs against the content of the last user or tool message; the first
//! match wins. Unmatched input is an error, never a silent default, so a
//! drifting test fails loudly.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::types::{
    ChatBackend, ChatRequest, CompletionResult, ProtocolError, RawToolCall, Role, TokenUsage,
};
use super::wire::encode_request;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    /// Exact match on the last user/tool message content.
    Equals(String),
    /// Substring match.
    Contains(String),
}

impl Matcher {
    fn matches(&self, content: &str) -> bool {
        match self {
            Matcher::Equals(s) => content == s,
            Matcher::Contains(s) => content.contains(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedResponse {
    /// Plain assistant text.
    Text(String),
    /// One tool call; `arguments` is the raw wire string, so scripts can
    /// deliberately ship malformed JSON.
    ToolCall { name: String, arguments: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(rename = "match")]
    pub matcher: Matcher,
    pub respond: ScriptedResponse,
    /// Scripted token usage; when absent, a deterministic estimate of
    /// one token per four characters is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockScript {
    pub entries: Vec<ScriptEntry>,
}

/// Scripted chat backend. Identical inputs yield identical outputs.
pub struct MockBackend {
    script: MockScript,
}

impl MockBackend {
    pub fn new(entries: Vec<ScriptEntry>) -> MockBackend {
        MockBackend {
            script: MockScript { entries },
        }
    }

    pub fn from_script_file(path: impl AsRef<Path>) -> Result<MockBackend, ProtocolError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            ProtocolError::Config(format!(
                "cannot read mock script {}: {e}",
                path.as_ref().display()
            ))
        })?;
        let script: MockScript = serde_json::from_str(&text)
            .map_err(|e| ProtocolError::Config(format!("mock script did not parse: {e}")))?;
        Ok(MockBackend { script })
    }

    pub fn entries(&self) -> &[ScriptEntry] {
        &self.script.entries
    }
}

fn estimate_tokens(chars: usize) -> u64 {
    (chars as u64).div_ceil(4)
}

impl ChatBackend for MockBackend {
    fn chat_complete(&self, request: &ChatRequest) -> Result<CompletionResult, ProtocolError> {
        let started = Instant::now();
        let target = request
            .messages
            .iter()
            .rev()
            .find(|m| matches!(m.role, Role::User | Role::Tool))
            .map(|m| m.content.as_str())
            .unwrap_or_default();

        let entry = self
            .script
            .entries
            .iter()
            .find(|e| e.matcher.matches(target))
            .ok_or_else(|| ProtocolError::ScriptMiss(target.to_string()))?;

        let (content, tool_calls, completion_chars) = match &entry.respond {
            ScriptedResponse::Text(text) => (Some(text.clone()), Vec::new(), text.len()),
            ScriptedResponse::ToolCall { name, arguments } => (
                None,
                vec![RawToolCall {
                    id: format!("call_{:08x}", fxhash(target)),
                    name: name.clone(),
                    arguments: arguments.clone(),
                }],
                name.len() + arguments.len(),
            ),
        };

        let usage = entry.usage.unwrap_or_else(|| {
            let request_chars = serde_json::to_string(&encode_request(request))
                .map(|s| s.len())
                .unwrap_or(0);
            TokenUsage::new(
                estimate_tokens(request_chars),
                estimate_tokens(completion_chars),
            )
        });

        Ok(CompletionResult {
            content,
            tool_calls,
            usage,
            latency: started.elapsed(),
        })
    }
}

/// Small deterministic hash for stable scripted call ids.
fn fxhash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
