//! Live HTTP backend for any chat-completions-compatible endpoint.

use std::time::{Duration, Instant};

use super::types::{ChatBackend, ChatRequest, CompletionResult, ProtocolError};
use super::wire::{decode_response, encode_request, WireResponse};

/// Blocking HTTP client. The API key is read from an environment variable
/// named in the configuration; secrets never travel through flags.
pub struct HttpBackend {
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(
        base_url: impl Into<String>,
        api_key_env: &str,
        timeout: Duration,
    ) -> Result<HttpBackend, ProtocolError> {
        let api_key = std::env::var(api_key_env).ok().filter(|k| !k.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProtocolError::Config(e.to_string()))?;
        Ok(HttpBackend {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            client,
        })
    }

    fn post_once(&self, body: &serde_json::Value) -> Result<WireResponse, ProtocolError> {
        let url = format!("{}/chat/completions", self.base_url);
        let mut request = self.client.post(&url).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                ProtocolError::Timeout
            } else {
                ProtocolError::Transport(e.to_string())
            }
        })?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| ProtocolError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ProtocolError::Status(status.as_u16(), truncate(&text, 300)));
        }
        serde_json::from_str(&text).map_err(|e| ProtocolError::MalformedBody(e.to_string()))
    }
}

impl ChatBackend for HttpBackend {
    fn chat_complete(&self, request: &ChatRequest) -> Result<CompletionResult, ProtocolError> {
        let body = serde_json::to_value(encode_request(request))
            .map_err(|e| ProtocolError::Config(e.to_string()))?;
        let started = Instant::now();
        // One retry on transport errors only; malformed model output is
        // experiment data, not something to hide behind retries.
        let wire = match self.post_once(&body) {
            Ok(wire) => wire,
            Err(ProtocolError::Transport(_)) => self.post_once(&body)?,
            Err(other) => return Err(other),
        };
        let mut result = decode_response(wire)?;
        result.latency = started.elapsed();
        Ok(result)
    }
}

fn truncate(s: &str, limit: usize) -> String {
    if s.len() <= limit {
        s.to_string()
    } else {
        let mut end = limit;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &s[..end])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ChatMessage;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn spawn_stub(status_line: &'static str, body: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            if let Ok((mut stream, _)) = listener.accept() {
                let mut buf = [0u8; 8192];
                let _ = stream.read(&mut buf);
                let response = format!(
                    "HTTP/1.1 {status_line}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        format!("http://{addr}")
    }

    #[test]
    fn server_error_maps_to_status() {
        let base = spawn_stub("500 Internal Server Error", "{\"error\":\"boom\"}");
        let backend =
            HttpBackend::new(base, "FINQ_TEST_NO_SUCH_KEY", Duration::from_secs(5)).unwrap();
        let request = ChatRequest::new("gpt-test", vec![ChatMessage::user("hi")]);
        match backend.chat_complete(&request) {
            Err(ProtocolError::Status(500, _)) => {}
            other => panic!("expected 500 status error, got {other:?}"),
        }
    }

    #[test]
    fn successful_body_decodes_and_measures_latency() {
        let base = spawn_stub(
            "200 OK",
            r#"{"choices":[{"message":{"role":"assistant","content":"42"}}],"usage":{"prompt_tokens":10,"completion_tokens":1,"total_tokens":11}}"#,
        );
        let backend =
            HttpBackend::new(base, "FINQ_TEST_NO_SUCH_KEY", Duration::from_secs(5)).unwrap();
        let request = ChatRequest::new("gpt-test", vec![ChatMessage::user("meaning of life?")]);
        let result = backend.chat_complete(&request).unwrap();
        assert_eq!(result.content.as_deref(), Some("42"));
        assert_eq!(result.usage.prompt_tokens, 10);
        assert!(result.latency > Duration::ZERO);
    }
}
