use std::time::Duration;

use serde_json::Value;

use super::{CompletionEndpoint, CompletionRequest, EndpointError};
use crate::error::{Error, Result};

/// Environment variable holding the completion endpoint URL.
pub const ENDPOINT_URL_ENV: &str = "ABSDETECT_ENDPOINT_URL";
/// Environment variable holding the bearer credential.
pub const API_KEY_ENV: &str = "ABSDETECT_API_KEY";

/// POSTs the [`CompletionRequest`] as JSON and reads the completion text
/// from `choices[0].text`, `text` or `completion` in the JSON response.
pub struct HttpEndpoint {
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpEndpoint {
            url: url.into(),
            api_key,
            agent,
        }
    }

    /// Reads the URL and credential from the environment. Both must be set.
    pub fn from_env(timeout: Duration) -> Result<Self> {
        let url = std::env::var(ENDPOINT_URL_ENV)
            .map_err(|_| Error::Config(format!("{ENDPOINT_URL_ENV} is not set (use --mock for offline runs)")))?;
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| Error::Config(format!("{API_KEY_ENV} is not set (use --mock for offline runs)")))?;
        Ok(Self::new(url, Some(key), timeout))
    }
}

pub(crate) fn extract_completion(body: &Value) -> Option<String> {
    if let Some(text) = body.pointer("/choices/0/text").and_then(Value::as_str) {
        return Some(text.to_string());
    }
    ["text", "completion"]
        .iter()
        .find_map(|k| body.get(*k).and_then(Value::as_str))
        .map(str::to_string)
}

impl CompletionEndpoint for HttpEndpoint {
    fn identifier(&self) -> String {
        self.url.clone()
    }

    fn complete(&self, request: &CompletionRequest) -> std::result::Result<String, EndpointError> {
        let mut call = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(request)
            .map_err(|e| EndpointError::transient(None, e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| EndpointError::transient(Some(status), e.to_string()))?;
        if !(200..300).contains(&status) {
            let snippet: String = body.chars().take(200).collect();
            return Err(EndpointError::from_status(status, snippet));
        }
        let json: Value = serde_json::from_str(&body)
            .map_err(|e| EndpointError::fatal(Some(status), format!("response is not JSON: {e}")))?;
        extract_completion(&json)
            .ok_or_else(|| EndpointError::fatal(Some(status), "response carries no completion text"))
    }
}
