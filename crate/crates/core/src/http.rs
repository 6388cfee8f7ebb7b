//! Chat-completions client implementing [`Generator`].
//!
//! Wire format (POST `{base_url}/chat/completions`):
//!
//! ```json
//! {"model": "...", "messages": [{"role": "user", "content": "..."}],
//!  "max_tokens": 512, "temperature": 0.0, "seed": 0}
//! ```
//!
//! The reply text is read from `choices[0].message.content`. The bearer
//! credential comes from `CHARTTHINKER_API_KEY` when set. Status 429, any
//! 5xx, and timeouts are retried with exponential backoff; everything else
//! fails at once. The request body is serialized once and resent unchanged.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::generation::{Concurrency, Generation, GenerationError, GenerationParams, Generator, GeneratorKind};

pub const API_KEY_ENV: &str = "CHARTTHINKER_API_KEY";
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;
const BODY_EXCERPT: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Wait before the first retry; doubles on each further retry.
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    pub fn backoff(&self, retry: u32) -> Duration {
        self.initial_backoff * 2u32.saturating_pow(retry)
    }
}

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(DEFAULT_TIMEOUT_SECS),
            retry: RetryPolicy::default(),
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    max_tokens: u32,
    temperature: f64,
    seed: u64,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

/// Counting gate on in-flight requests.
#[derive(Debug)]
struct Gate {
    in_flight: Mutex<usize>,
    cv: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(limit: usize) -> Self {
        Self {
            in_flight: Mutex::new(0),
            cv: Condvar::new(),
            limit: limit.max(1),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpGenerator {
    config: HttpConfig,
    url: String,
    id: String,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl std::fmt::Debug for HttpGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpGenerator")
            .field("url", &self.url)
            .field("model", &self.config.model)
            .finish()
    }
}

enum Attempt {
    Done(String),
    Retryable(GenerationError),
    Fatal(GenerationError),
}

impl HttpGenerator {
    pub fn new(config: HttpConfig) -> Result<Self, GenerationError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GenerationError::Transport(e.to_string()))?;
        let url = format!("{}/chat/completions", config.base_url.trim_end_matches('/'));
        Ok(Self {
            id: format!("http:{}", config.model),
            gate: Gate::new(config.max_in_flight),
            url,
            client,
            config,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn request_body(&self, prompt: &str, params: &GenerationParams) -> Vec<u8> {
        let req = ChatRequest {
            model: &self.config.model,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
            max_tokens: params.max_tokens,
            temperature: params.temperature,
            seed: params.seed,
        };
        serde_json::to_vec(&req).expect("request serializes")
    }

    fn attempt(&self, body: &[u8]) -> Attempt {
        let mut req = self
            .client
            .post(&self.url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_vec());
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retryable(GenerationError::Timeout),
            Err(e) => return Attempt::Fatal(GenerationError::Transport(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Retryable(GenerationError::Timeout),
            Err(e) => return Attempt::Fatal(GenerationError::Transport(e.to_string())),
        };
        if !(200..300).contains(&status) {
            let err = GenerationError::EndpointError {
                status,
                body: text.chars().take(BODY_EXCERPT).collect(),
            };
            return if status == 429 || status >= 500 {
                Attempt::Retryable(err)
            } else {
                Attempt::Fatal(err)
            };
        }
        let parsed: ChatResponse = match serde_json::from_str(&text) {
            Ok(p) => p,
            Err(e) => return Attempt::Fatal(GenerationError::MalformedResponse(e.to_string())),
        };
        match parsed.choices.into_iter().next().and_then(|c| c.message.content) {
            Some(content) => Attempt::Done(content),
            None => Attempt::Fatal(GenerationError::MalformedResponse(
                "no choices[0].message.content".into(),
            )),
        }
    }
}

impl Generator for HttpGenerator {
    fn id(&self) -> &str {
        &self.id
    }

    fn kind(&self) -> GeneratorKind {
        GeneratorKind::External
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Bounded(self.gate.limit)
    }

    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<Generation, GenerationError> {
        if prompt.trim().is_empty() {
            return Err(GenerationError::EmptyPrompt);
        }
        params.validate()?;
        let body = self.request_body(prompt, params);
        let _permit = self.gate.acquire();
        let mut retry = 0;
        loop {
            match self.attempt(&body) {
                Attempt::Done(text) => return Ok(Generation { text, trace: None }),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retryable(e) => {
                    if retry >= self.config.retry.max_retries {
                        return Err(e);
                    }
                    std::thread::sleep(self.config.retry.backoff(retry));
                    retry += 1;
                }
            }
        }
    }
}
