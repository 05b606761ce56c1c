//! Chat models: message types, endpoint configuration, backends, prompt
//! construction and the behavior describers.

mod backend;
pub mod prompts;
pub mod raster;
mod vlm;

use std::path::Path;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

pub use backend::{ChatBackend, HttpBackend, MockBackend, TranscriptEntry};
pub use vlm::{describe_behavior_vlm, sample_frames};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContentPart {
    Text { text: String },
    Image { media_type: String, data: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: Vec<ContentPart>,
}

impl ChatMessage {
    pub fn text(role: Role, text: impl Into<String>) -> Self {
        Self { role, content: vec![ContentPart::Text { text: text.into() }] }
    }

    pub fn system(text: impl Into<String>) -> Self {
        Self::text(Role::System, text)
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self::text(Role::User, text)
    }

    pub fn with_image(mut self, image: &ImageData) -> Self {
        self.content.push(ContentPart::Image { media_type: image.media_type.clone(), data: image.data.clone() });
        self
    }

    /// All text parts joined by newlines.
    pub fn plain_text(&self) -> String {
        let texts: Vec<&str> = self
            .content
            .iter()
            .filter_map(|p| match p {
                ContentPart::Text { text } => Some(text.as_str()),
                ContentPart::Image { .. } => None,
            })
            .collect();
        texts.join("\n")
    }

    pub fn image_count(&self) -> usize {
        self.content.iter().filter(|p| matches!(p, ContentPart::Image { .. })).count()
    }

    /// OpenAI chat-completions wire form; images become `image_url` data URIs.
    pub fn to_wire(&self) -> serde_json::Value {
        let parts: Vec<serde_json::Value> = self
            .content
            .iter()
            .map(|p| match p {
                ContentPart::Text { text } => serde_json::json!({ "type": "text", "text": text }),
                ContentPart::Image { media_type, data } => serde_json::json!({
                    "type": "image_url",
                    "image_url": { "url": format!("data:{media_type};base64,{data}") }
                }),
            })
            .collect();
        serde_json::json!({ "role": self.role, "content": parts })
    }
}

/// Text of a whole request, used for transcript matching and assertions.
pub fn request_text(messages: &[ChatMessage]) -> String {
    messages.iter().map(ChatMessage::plain_text).collect::<Vec<_>>().join("\n")
}

pub fn image_count(messages: &[ChatMessage]) -> usize {
    messages.iter().map(ChatMessage::image_count).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageData {
    pub media_type: String,
    /// Base64 payload.
    pub data: String,
}

impl ImageData {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GoalError> {
        let media_type = if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
            "image/png"
        } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
            "image/jpeg"
        } else {
            return Err(GoalError::UnsupportedImage);
        };
        Ok(Self { media_type: media_type.into(), data: base64::engine::general_purpose::STANDARD.encode(bytes) })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GoalError {
    #[error("a goal needs text, an image, or both")]
    Empty,
    #[error("goal image must be PNG or JPEG")]
    UnsupportedImage,
    #[error("cannot read goal image {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// The user's task statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalPrompt {
    pub text: Option<String>,
    pub image: Option<ImageData>,
}

impl GoalPrompt {
    pub fn new(text: Option<String>, image: Option<ImageData>) -> Result<Self, GoalError> {
        let text = text.filter(|t| !t.trim().is_empty());
        if text.is_none() && image.is_none() {
            return Err(GoalError::Empty);
        }
        Ok(Self { text, image })
    }

    pub fn from_text(text: impl Into<String>) -> Result<Self, GoalError> {
        Self::new(Some(text.into()), None)
    }

    pub fn load(text: Option<String>, image_path: Option<&Path>) -> Result<Self, GoalError> {
        let image = match image_path {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|source| GoalError::Io { path: path.display().to_string(), source })?;
                Some(ImageData::from_bytes(&bytes)?)
            }
            None => None,
        };
        Self::new(text, image)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelRole {
    Critic,
    Coder,
    Vlm,
}

impl ModelRole {
    fn suffix(self) -> &'static str {
        match self {
            ModelRole::Critic => "CRITIC",
            ModelRole::Coder => "CODER",
            ModelRole::Vlm => "VLM",
        }
    }
}

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmEndpoint {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout: Duration,
    pub max_retries: u32,
    pub vision_capable: bool,
}

impl LlmEndpoint {
    pub fn for_role(role: ModelRole) -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            model: DEFAULT_MODEL.into(),
            api_key_env: "REWARDFORGE_LLM_API_KEY".into(),
            temperature: 0.7,
            timeout: Duration::from_secs(120),
            max_retries: 3,
            vision_capable: role != ModelRole::Coder,
        }
    }

    /// Resolves the endpoint for `role` from `REWARDFORGE_LLM_*` variables;
    /// a `_CRITIC`/`_CODER`/`_VLM` suffixed variable wins over the plain one.
    pub fn from_lookup(role: ModelRole, lookup: impl Fn(&str) -> Option<String>) -> Self {
        let get = |key: &str| {
            let specific = format!("REWARDFORGE_LLM_{key}_{}", role.suffix());
            lookup(&specific).map(|v| (specific, v)).or_else(|| {
                let general = format!("REWARDFORGE_LLM_{key}");
                lookup(&general).map(|v| (general, v))
            })
        };
        let mut endpoint = Self::for_role(role);
        if let Some((_, url)) = get("BASE_URL") {
            endpoint.base_url = url;
        }
        if let Some((_, model)) = get("MODEL") {
            endpoint.model = model;
        }
        if let Some((name, _)) = get("API_KEY") {
            endpoint.api_key_env = name;
        }
        if let Some((_, flag)) = get("VISION") {
            endpoint.vision_capable = matches!(flag.trim(), "1" | "true" | "yes");
        }
        endpoint
    }

    pub fn from_env(role: ModelRole) -> Self {
        Self::from_lookup(role, |k| std::env::var(k).ok())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.timeout.is_zero() {
            return Err("timeout must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unparseable response: {0}")]
    BadResponse(String),
    #[error("mock transcript exhausted after {0} responses")]
    MockExhausted(usize),
    #[error("mock transcript entry {index} expects the request to contain {expected:?}")]
    MockMismatch { index: usize, expected: String },
    #[error("endpoint {0} is not vision capable")]
    VisionUnsupported(String),
}

impl LlmError {
    pub fn code(&self) -> &'static str {
        match self {
            LlmError::Transport(_) => "TRANSPORT_ERROR",
            LlmError::BadResponse(_) => "BAD_RESPONSE",
            LlmError::MockExhausted(_) => "MOCK_EXHAUSTED",
            LlmError::MockMismatch { .. } => "MOCK_MISMATCH",
            LlmError::VisionUnsupported(_) => "VISION_UNSUPPORTED",
        }
    }
}

/// Temperatures used by the pipeline.
pub const CODER_GENERATION_TEMPERATURE: f64 = 0.7;
pub const CODER_REPAIR_TEMPERATURE: f64 = 0.2;
pub const CRITIC_TEMPERATURE: f64 = 0.7;

/// A backend plus one endpoint per role.
pub struct LlmClient {
    pub backend: Box<dyn ChatBackend>,
    pub critic: LlmEndpoint,
    pub coder: LlmEndpoint,
    pub vlm: LlmEndpoint,
}

impl LlmClient {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        Self {
            backend,
            critic: LlmEndpoint::for_role(ModelRole::Critic),
            coder: LlmEndpoint::for_role(ModelRole::Coder),
            vlm: LlmEndpoint::for_role(ModelRole::Vlm),
        }
    }

    pub fn from_env(backend: Box<dyn ChatBackend>) -> Self {
        Self {
            backend,
            critic: LlmEndpoint::from_env(ModelRole::Critic),
            coder: LlmEndpoint::from_env(ModelRole::Coder),
            vlm: LlmEndpoint::from_env(ModelRole::Vlm),
        }
    }

    pub fn endpoint(&self, role: ModelRole) -> &LlmEndpoint {
        match role {
            ModelRole::Critic => &self.critic,
            ModelRole::Coder => &self.coder,
            ModelRole::Vlm => &self.vlm,
        }
    }

    pub fn chat(&self, role: ModelRole, messages: &[ChatMessage], temperature: f64) -> Result<String, LlmError> {
        let endpoint = self.endpoint(role);
        if image_count(messages) > 0 && !endpoint.vision_capable {
            return Err(LlmError::VisionUnsupported(endpoint.model.clone()));
        }
        self.backend.chat(endpoint, messages, temperature)
    }
}
