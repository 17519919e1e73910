//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use labelspan::synth::{LlmClient, LlmError};
use serde_json::{json, Value};

pub struct ChatClient {
    agent: ureq::Agent,
    url: String,
    api_key: String,
    model: String,
    temperature: f64,
}

impl ChatClient {
    pub fn new(api_base: &str, api_key: String, model: String, temperature: f64, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { agent, url: format!("{}/chat/completions", api_base.trim_end_matches('/')), api_key, model, temperature }
    }
}

fn classify(e: ureq::Error) -> LlmError {
    match e {
        ureq::Error::StatusCode(code) if code == 408 || code == 429 || code >= 500 => {
            LlmError::Transient(format!("HTTP {code}"))
        }
        ureq::Error::StatusCode(code) => LlmError::Permanent(format!("HTTP {code}")),
        ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => {
            LlmError::Transient(e.to_string())
        }
        other => LlmError::Permanent(other.to_string()),
    }
}

impl LlmClient for ChatClient {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut resp = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(classify)?;
        let value: Value = resp.body_mut().read_json().map_err(classify)?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::Permanent(format!("response without message content: {value}")))
    }
}
