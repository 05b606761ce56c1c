use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{request_text, ChatMessage, LlmEndpoint, LlmError};

pub trait ChatBackend: Send + Sync {
    /// Sends one chat request and returns the first choice's content.
    fn chat(&self, endpoint: &LlmEndpoint, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError>;

    /// True when responses are scripted and must be consumed in order.
    fn is_sequential(&self) -> bool {
        false
    }
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

/// Chat-completions over HTTP with bearer auth and exponential backoff.
pub struct HttpBackend {
    backoff_base: Duration,
    sleep: Sleeper,
}

impl Default for HttpBackend {
    fn default() -> Self {
        Self { backoff_base: Duration::from_secs(1), sleep: Box::new(std::thread::sleep) }
    }
}

impl HttpBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces the sleep between retries (tests record instead of waiting).
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    fn attempt(&self, endpoint: &LlmEndpoint, body: &serde_json::Value) -> Result<String, Attempt> {
        let url = format!("{}/chat/completions", endpoint.base_url.trim_end_matches('/'));
        let agent = ureq::AgentBuilder::new().timeout(endpoint.timeout).build();
        let mut request = agent.post(&url).set("Content-Type", "application/json");
        if let Ok(key) = std::env::var(&endpoint.api_key_env) {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        let response = match request.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let detail = r.into_string().unwrap_or_default();
                let err = LlmError::Transport(format!("HTTP {code}: {}", detail.trim()));
                return Err(if code == 429 || code >= 500 { Attempt::Retry(err) } else { Attempt::Fatal(err) });
            }
            Err(e) => return Err(Attempt::Retry(LlmError::Transport(e.to_string()))),
        };
        let text = response.into_string().map_err(|e| Attempt::Retry(LlmError::Transport(e.to_string())))?;
        parse_completion(&text).map_err(Attempt::Fatal)
    }
}

enum Attempt {
    Retry(LlmError),
    Fatal(LlmError),
}

fn parse_completion(body: &str) -> Result<String, LlmError> {
    let value: serde_json::Value = serde_json::from_str(body).map_err(|e| LlmError::BadResponse(e.to_string()))?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| LlmError::BadResponse("missing choices[0].message.content".into()))
}

impl ChatBackend for HttpBackend {
    fn chat(&self, endpoint: &LlmEndpoint, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        let body = serde_json::json!({
            "model": endpoint.model,
            "messages": messages.iter().map(ChatMessage::to_wire).collect::<Vec<_>>(),
            "temperature": temperature,
        });
        let mut delay = self.backoff_base;
        let mut attempt = 0;
        loop {
            match self.attempt(endpoint, &body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    if attempt >= endpoint.max_retries {
                        return Err(e);
                    }
                    (self.sleep)(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_substring: Option<String>,
    pub response: String,
}

/// Scripted responses consumed strictly in order.
pub struct MockBackend {
    entries: Vec<TranscriptEntry>,
    state: Mutex<MockState>,
}

#[derive(Default)]
struct MockState {
    next: usize,
    requests: Vec<Vec<ChatMessage>>,
}

impl MockBackend {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        Self { entries, state: Mutex::default() }
    }

    pub fn from_responses<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self::new(responses.into_iter().map(|r| TranscriptEntry { expect_substring: None, response: r.into() }).collect())
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let entries = serde_json::from_str(&text).map_err(|e| format!("bad transcript {}: {e}", path.display()))?;
        Ok(Self::new(entries))
    }

    /// Every request received so far, including rejected ones.
    pub fn requests(&self) -> Vec<Vec<ChatMessage>> {
        self.state.lock().unwrap().requests.clone()
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.state.lock().unwrap().next
    }
}

impl ChatBackend for MockBackend {
    fn chat(&self, _: &LlmEndpoint, messages: &[ChatMessage], _: f64) -> Result<String, LlmError> {
        let mut state = self.state.lock().unwrap();
        state.requests.push(messages.to_vec());
        let index = state.next;
        let entry = self.entries.get(index).ok_or(LlmError::MockExhausted(index))?;
        if let Some(expected) = &entry.expect_substring {
            if !request_text(messages).contains(expected.as_str()) {
                return Err(LlmError::MockMismatch { index, expected: expected.clone() });
            }
        }
        state.next += 1;
        Ok(entry.response.clone())
    }

    fn is_sequential(&self) -> bool {
        true
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<T> {
    fn chat(&self, endpoint: &LlmEndpoint, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        (**self).chat(endpoint, messages, temperature)
    }

    fn is_sequential(&self) -> bool {
        (**self).is_sequential()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{LlmEndpoint, ModelRole};

    fn endpoint() -> LlmEndpoint {
        LlmEndpoint::for_role(ModelRole::Coder)
    }

    #[test]
    fn scripted_response() {
        let mock = MockBackend::from_responses(["hello"]);
        assert_eq!(mock.chat(&endpoint(), &[ChatMessage::user("anything")], 0.7).unwrap(), "hello");
    }

    #[test]
    fn expectation_mismatch() {
        let mock = MockBackend::new(vec![TranscriptEntry { expect_substring: Some("step-back".into()), response: "X".into() }]);
        let err = mock.chat(&endpoint(), &[ChatMessage::user("plain request")], 0.7).unwrap_err();
        assert_eq!(err.code(), "MOCK_MISMATCH");
        assert_eq!(mock.remaining(), 1);
    }

    #[test]
    fn exhaustion() {
        let mock = MockBackend::from_responses(["only"]);
        mock.chat(&endpoint(), &[ChatMessage::user("a")], 0.7).unwrap();
        let err = mock.chat(&endpoint(), &[ChatMessage::user("b")], 0.7).unwrap_err();
        assert_eq!(err, LlmError::MockExhausted(1));
    }

    #[test]
    fn completion_parsing() {
        assert_eq!(parse_completion(r#"{"choices":[{"message":{"content":"hi"}}]}"#).unwrap(), "hi");
        assert_eq!(parse_completion("{}").unwrap_err().code(), "BAD_RESPONSE");
        assert_eq!(parse_completion("not json").unwrap_err().code(), "BAD_RESPONSE");
    }
}
