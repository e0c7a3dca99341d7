//! Chat-completions wire format, shared by the HTTP backend and the mock.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::types::{
    ChatMessage, ChatRequest, CompletionResult, ProtocolError, RawToolCall, Role, TokenUsage,
    ToolChoice,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub model: String,
    pub messages: Vec<WireMessage>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tools: Vec<WireTool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_choice: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_calls: Option<Vec<WireToolCall>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTool {
    #[serde(rename = "type")]
    pub kind: String,
    pub function: WireToolFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireToolFunction {
    pub name: String,
    pub description: String,
    pub parameters: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireToolCall {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub function: WireCalledFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCalledFunction {
    pub name: String,
    pub arguments: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub choices: Vec<WireChoice>,
    #[serde(default)]
    pub usage: Option<WireUsage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireChoice {
    pub message: WireMessage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    #[serde(default)]
    pub total_tokens: u64,
}

fn role_str(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
        Role::Tool => "tool",
    }
}

pub fn encode_message(message: &ChatMessage) -> WireMessage {
    WireMessage {
        role: role_str(message.role).to_string(),
        content: Some(message.content.clone()),
        tool_call_id: message.tool_call_id.clone(),
        tool_calls: if message.tool_calls.is_empty() {
            None
        } else {
            Some(
                message
                    .tool_calls
                    .iter()
                    .map(|c| WireToolCall {
                        id: c.id.clone(),
                        kind: "function".into(),
                        function: WireCalledFunction {
                            name: c.name.clone(),
                            arguments: c.arguments.clone(),
                        },
                    })
                    .collect(),
            )
        },
    }
}

/// Encode a request for the POST body.
pub fn encode_request(request: &ChatRequest) -> WireRequest {
    WireRequest {
        model: request.model.clone(),
        messages: request.messages.iter().map(encode_message).collect(),
        tools: request
            .tools
            .iter()
            .map(|t| WireTool {
                kind: "function".into(),
                function: WireToolFunction {
                    name: t.name.clone(),
                    description: t.description.clone(),
                    parameters: t.parameters.clone(),
                },
            })
            .collect(),
        tool_choice: match request.tool_choice {
            ToolChoice::Auto if request.tools.is_empty() => None,
            ToolChoice::Auto => Some(json!("auto")),
            ToolChoice::None => Some(json!("none")),
            ToolChoice::Required => Some(json!("required")),
        },
        temperature: request.temperature,
    }
}

/// Decode a response body into a completion (latency filled by the caller).
pub fn decode_response(response: WireResponse) -> Result<CompletionResult, ProtocolError> {
    let choice = response
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| ProtocolError::MalformedBody("response has no choices".into()))?;
    let tool_calls = choice
        .message
        .tool_calls
        .unwrap_or_default()
        .into_iter()
        .map(|c| RawToolCall {
            id: c.id,
            name: c.function.name,
            arguments: c.function.arguments,
        })
        .collect();
    let usage = response
        .usage
        .map(|u| TokenUsage::new(u.prompt_tokens, u.completion_tokens))
        .unwrap_or_default();
    Ok(CompletionResult {
        content: choice.message.content.filter(|c| !c.is_empty()),
        tool_calls,
        usage,
        latency: std::time::Duration::ZERO,
    })
}

#[cfg(test)]
mod tests {
    use super::super::types::ToolSpec;
    use super::*;

    #[test]
    fn request_encoding_round_trips_through_json() {
        let request = ChatRequest {
            model: "gpt-test".into(),
            messages: vec![
                ChatMessage::system("be terse"),
                ChatMessage::user("latest NVDA close?"),
            ],
            tools: vec![ToolSpec {
                name: "get_stock_price".into(),
                description: "prices".into(),
                parameters: json!({"type": "object"}),
            }],
            tool_choice: ToolChoice::Auto,
            temperature: Some(0.0),
        };
        let wire = encode_request(&request);
        let text = serde_json::to_string(&wire).unwrap();
        let back: WireRequest = serde_json::from_str(&text).unwrap();
        assert_eq!(wire, back);
        assert_eq!(back.tool_choice, Some(json!("auto")));
    }

    #[test]
    fn response_with_tool_calls_decodes() {
        let body = json!({
            "choices": [{
                "message": {
                    "role": "assistant",
                    "content": null,
                    "tool_calls": [{
                        "id": "call_0",
                        "type": "function",
                        "function": {"name": "get_stock_price", "arguments": "{\"ticker\":\"NVDA\"}"}
                    }]
                },
                "finish_reason": "tool_calls"
            }],
            "usage": {"prompt_tokens": 12, "completion_tokens": 7, "total_tokens": 19}
        });
        let wire: WireResponse = serde_json::from_value(body).unwrap();
        let result = decode_response(wire).unwrap();
        assert_eq!(result.tool_calls.len(), 1);
        assert_eq!(result.tool_calls[0].name, "get_stock_price");
        assert_eq!(result.usage, TokenUsage::new(12, 7));
        assert!(result.content.is_none());
    }

    #[test]
    fn empty_choices_is_malformed() {
        let wire: WireResponse = serde_json::from_value(json!({"choices": []})).unwrap();
        assert!(matches!(
            decode_response(wire),
            Err(ProtocolError::MalformedBody(_))
        ));
    }
}
