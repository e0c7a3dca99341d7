//! Wire-level client for a chat-completions-compatible API with tool
//! calling, a deterministic scripted mock, and token/cost accounting.

mod http;
mod mock;
mod rates;
mod types;
mod wire;

pub use http::HttpBackend;
pub use mock::{Matcher, MockBackend, MockScript, ScriptEntry, ScriptedResponse};
pub use rates::{cost, RateCard, RateCardError};
pub use types::{
    chat_complete, parse_tool_calls, ChatBackend, ChatMessage, ChatRequest, CompletionResult,
    ProtocolError, RawToolCall, Role, TokenUsage, ToolCallRequest, ToolChoice, ToolSpec,
    UsageSession,
};
pub use wire::{decode_response, encode_request, WireRequest, WireResponse};
