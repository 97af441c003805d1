//! HTTP client for OpenAI-compatible chat-completions endpoints.
//!
//! One completion request per vote: single-turn, user role only. Vision
//! requests attach the overlay PNG as a base64 `data:` URI in an
//! `image_url` content part; text requests send the prompt as a plain
//! string. Authentication is a bearer token read from the `LLM_API_KEY`
//! environment variable. Transient failures (connection errors, timeouts,
//! HTTP 429/5xx) are retried with exponential backoff; anything else fails
//! fast.

use std::time::Duration;

use base64::Engine as _;
use serde::Deserialize;
use serde_json::json;

use crate::error::Error;
use crate::verifier::{ChatClient, VerifierConfig, VoteRequest};

/// Environment variable holding the bearer token for live verification.
pub const API_KEY_ENV: &str = "LLM_API_KEY";

/// Blocking chat-completions client with retry.
pub struct HttpChatClient {
    http: reqwest::blocking::Client,
    url: String,
    api_key: String,
    max_retries: u32,
    backoff_base: Duration,
}

impl HttpChatClient {
    /// Builds a client against `endpoint`. The endpoint may be a base URL
    /// (`https://host/v1`) or the full chat-completions URL; the standard
    /// path is appended when missing.
    pub fn new(
        endpoint: &str,
        api_key: String,
        request_timeout: Duration,
        max_retries: u32,
    ) -> Result<Self, Error> {
        if endpoint.is_empty() {
            return Err(Error::BadVerifierConfig {
                reason: "live verification requires an endpoint URL".to_string(),
            });
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(request_timeout)
            .build()
            .map_err(|e| Error::Transport {
                attempts: 0,
                reason: format!("cannot build HTTP client: {e}"),
            })?;
        Ok(Self {
            http,
            url: chat_completions_url(endpoint),
            api_key,
            max_retries,
            backoff_base: Duration::from_millis(500),
        })
    }

    /// Builds a client from a verifier config plus the `LLM_API_KEY`
    /// environment variable. Fails before any work if the key is unset.
    pub fn from_env(config: &VerifierConfig) -> Result<Self, Error> {
        let api_key = std::env::var(API_KEY_ENV).map_err(|_| Error::MissingApiKey {
            name: API_KEY_ENV.to_string(),
        })?;
        Self::new(
            &config.endpoint,
            api_key,
            config.request_timeout,
            config.max_retries,
        )
    }

    /// Overrides the backoff base delay; tests use a tiny value so retry
    /// paths run fast.
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }
}

/// Appends `/chat/completions` unless the endpoint already points there.
fn chat_completions_url(endpoint: &str) -> String {
    let trimmed = endpoint.trim_end_matches('/');
    if trimmed.ends_with("/chat/completions") {
        trimmed.to_string()
    } else {
        format!("{trimmed}/chat/completions")
    }
}

/// Message body for one vote. The vote index is deliberately absent: it
/// distinguishes cache entries, not API calls.
fn request_body(request: &VoteRequest<'_>) -> serde_json::Value {
    let content = match request.image_png {
        Some(png) => {
            let data_uri = format!(
                "data:image/png;base64,{}",
                base64::engine::general_purpose::STANDARD.encode(png)
            );
            json!([
                {"type": "text", "text": request.prompt},
                {"type": "image_url", "image_url": {"url": data_uri}},
            ])
        }
        None => json!(request.prompt),
    };
    json!({
        "model": request.model,
        "temperature": request.temperature,
        "messages": [{"role": "user", "content": content}],
    })
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

fn is_retryable(status: reqwest::StatusCode) -> bool {
    status.as_u16() == 429 || status.is_server_error()
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &VoteRequest<'_>) -> Result<String, Error> {
        let body = request_body(request);
        let mut last_reason = String::new();

        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff_base * 2u32.pow(attempt - 1));
            }
            let sent = self
                .http
                .post(&self.url)
                .bearer_auth(&self.api_key)
                .json(&body)
                .send();
            match sent {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let parsed: ChatResponse =
                            response.json().map_err(|e| Error::BadApiResponse {
                                reason: format!("cannot decode completion: {e}"),
                            })?;
                        let choice =
                            parsed.choices.into_iter().next().ok_or(Error::BadApiResponse {
                                reason: "response contained no choices".to_string(),
                            })?;
                        return Ok(choice.message.content);
                    }
                    let excerpt: String = response
                        .text()
                        .unwrap_or_default()
                        .chars()
                        .take(200)
                        .collect();
                    last_reason = format!("HTTP {status}: {excerpt}");
                    if !is_retryable(status) {
                        return Err(Error::Transport {
                            attempts: attempt + 1,
                            reason: last_reason,
                        });
                    }
                }
                Err(e) => {
                    last_reason = e.to_string();
                }
            }
        }
        Err(Error::Transport {
            attempts: self.max_retries + 1,
            reason: last_reason,
        })
    }
}
