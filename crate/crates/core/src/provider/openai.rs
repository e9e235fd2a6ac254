use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use super::{Capabilities, ModelProvider, ModelRequest, ProviderError};

/// Settings for an OpenAI-style `/chat/completions` endpoint.
#[derive(Debug, Clone)]
pub struct OpenAiConfig {
    /// Base URL, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub vision: bool,
    pub timeout: Duration,
}

impl OpenAiConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            vision: true,
            timeout: Duration::from_secs(300),
        }
    }
}

pub struct OpenAiCompatible {
    config: OpenAiConfig,
    agent: ureq::Agent,
}

impl OpenAiCompatible {
    pub fn new(config: OpenAiConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        Self { config, agent }
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'))
    }
}

pub(crate) fn request_body(model: &str, request: &ModelRequest<'_>) -> Value {
    let content = match request.image {
        None => json!(request.prompt.text),
        Some(image) => {
            let data = base64::engine::general_purpose::STANDARD.encode(&image.bytes);
            json!([
                { "type": "text", "text": request.prompt.text },
                {
                    "type": "image_url",
                    "image_url": { "url": format!("data:{};base64,{}", image.media_type, data) }
                }
            ])
        }
    };
    json!({
        "model": model,
        "messages": [{ "role": "user", "content": content }],
    })
}

pub(crate) fn parse_response(body: &Value) -> Result<String, ProviderError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ProviderError::permanent("response has no choices[0].message.content"))
}

fn classify_status(status: u16, body: String) -> ProviderError {
    let message = format!("HTTP {status}: {body}");
    if status == 408 || status == 429 || status >= 500 {
        ProviderError::transient(message)
    } else {
        ProviderError::permanent(message)
    }
}

impl ModelProvider for OpenAiCompatible {
    fn name(&self) -> &str {
        "openai-compatible"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            text: true,
            vision: self.config.vision,
        }
    }

    fn complete(&self, request: &ModelRequest<'_>) -> Result<String, ProviderError> {
        if request.image.is_some() && !self.config.vision {
            return Err(ProviderError::unsupported("model configured without vision"));
        }
        let mut call = self.agent.post(&self.url());
        if let Some(key) = &self.config.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        let response = call.send_json(request_body(&self.config.model, request));
        match response {
            Ok(resp) => {
                let body: Value = resp
                    .into_json()
                    .map_err(|e| ProviderError::transient(format!("unreadable response: {e}")))?;
                parse_response(&body)
            }
            Err(ureq::Error::Status(status, resp)) => {
                Err(classify_status(status, resp.into_string().unwrap_or_default()))
            }
            Err(ureq::Error::Transport(t)) => Err(ProviderError::transient(t.to_string())),
        }
    }
}
