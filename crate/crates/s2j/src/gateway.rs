//! HTTP clients for chat-completion endpoints and the auxiliary scalar
//! scorer.
//!
//! Transport is injectable so retry, rate limiting, and the in-flight bound
//! are all testable without a network. Chat completions retry transient
//! failures (429, 5xx, timeouts) with exponential backoff capped at 60 s;
//! other 4xx responses fail immediately. Scorer results are cached for the
//! run so the same (query, response) is never scored twice.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointConfig {
    pub name: String,
    pub base_url: String,
    pub model_id: String,
    /// Name of the environment variable holding the API key; empty means
    /// unauthenticated.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            base_url: "http://localhost:8000".into(),
            model_id: "model".into(),
            api_key_env: String::new(),
            timeout_secs: 120,
            max_retries: 3,
            max_in_flight: 8,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("endpoint name must not be empty".into()));
        }
        if self.base_url.is_empty() {
            return Err(Error::Config(format!("endpoint {}: base_url must not be empty", self.name)));
        }
        if self.max_in_flight < 1 {
            return Err(Error::Config(format!("endpoint {}: max_in_flight must be >= 1", self.name)));
        }
        Ok(())
    }

    fn api_key(&self) -> Result<Option<String>> {
        if self.api_key_env.is_empty() {
            return Ok(None);
        }
        match std::env::var(&self.api_key_env) {
            Ok(key) => Ok(Some(key)),
            Err(_) => Err(Error::Config(format!(
                "endpoint {}: api key environment variable {} is not set",
                self.name, self.api_key_env
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self { temperature: 1.0, top_p: 1.0, max_tokens: 8192 }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.top_p) {
            return Err(Error::Config(format!("sampling.top_p must be in [0, 1], got {}", self.top_p)));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::Config(format!(
                "sampling.temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(Error::Config("sampling.max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

/// A delivered HTTP response: status plus decoded JSON body.
#[derive(Debug, Clone)]
pub struct TransportResponse {
    pub status: u16,
    pub body: serde_json::Value,
}

/// Failure before any HTTP status was produced.
#[derive(Debug, Clone)]
pub enum TransportFailure {
    Timeout,
    Connect(String),
}

impl std::fmt::Display for TransportFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransportFailure::Timeout => write!(f, "timeout"),
            TransportFailure::Connect(msg) => write!(f, "connect: {msg}"),
        }
    }
}

/// Wire-level POST of a JSON body. Implemented over reqwest in production
/// and by in-memory fakes in tests.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> std::result::Result<TransportResponse, TransportFailure>;
}

/// Production transport over a blocking HTTP client.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Self {
        Self { client: reqwest::blocking::Client::new() }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for HttpTransport {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
        timeout: Duration,
    ) -> std::result::Result<TransportResponse, TransportFailure> {
        let mut req = self.client.post(url).json(body).timeout(timeout);
        if let Some(key) = api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                TransportFailure::Timeout
            } else {
                TransportFailure::Connect(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let body = resp
            .json()
            .map_err(|e| TransportFailure::Connect(format!("undecodable body: {e}")))?;
        Ok(TransportResponse { status, body })
    }
}

/// Counting semaphore bounding concurrent requests per endpoint.
struct InFlightGate {
    permits: Mutex<usize>,
    freed: Condvar,
}

impl InFlightGate {
    fn new(limit: usize) -> Self {
        Self { permits: Mutex::new(limit), freed: Condvar::new() }
    }

    fn acquire(&self) {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.freed.wait(permits).unwrap();
        }
        *permits -= 1;
    }

    fn release(&self) {
        *self.permits.lock().unwrap() += 1;
        self.freed.notify_one();
    }
}

/// Exponential backoff: 1 s, 2 s, 4 s, ... capped at 60 s.
pub fn backoff_delay(attempt: u32) -> Duration {
    let secs = 1u64.checked_shl(attempt).unwrap_or(u64::MAX).min(60);
    Duration::from_secs(secs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

/// Chat-completion client with retry and a bounded in-flight gate.
pub struct ChatClient {
    endpoint: EndpointConfig,
    transport: Arc<dyn Transport>,
    gate: InFlightGate,
    sleep: Sleeper,
}

impl ChatClient {
    pub fn new(endpoint: EndpointConfig, transport: Arc<dyn Transport>) -> Result<Self> {
        endpoint.validate()?;
        let gate = InFlightGate::new(endpoint.max_in_flight);
        Ok(Self { endpoint, transport, gate, sleep: Box::new(std::thread::sleep) })
    }

    /// Replaces the between-retry sleep; tests use a no-op.
    pub fn with_sleeper(mut self, sleep: Sleeper) -> Self {
        self.sleep = sleep;
        self
    }

    pub fn endpoint(&self) -> &EndpointConfig {
        &self.endpoint
    }

    fn completions_url(&self) -> String {
        format!("{}/v1/chat/completions", self.endpoint.base_url.trim_end_matches('/'))
    }

    /// One completion for one prompt, retrying transient failures.
    pub fn complete(&self, prompt: &str, params: &SamplingParams) -> Result<Completion> {
        params.validate()?;
        let api_key = self.endpoint.api_key()?;
        let body = serde_json::json!({
            "model": self.endpoint.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        });
        let timeout = Duration::from_secs(self.endpoint.timeout_secs);
        let url = self.completions_url();
        let mut attempts = Vec::new();
        self.gate.acquire();
        let result = self.complete_guarded(&url, api_key.as_deref(), &body, timeout, &mut attempts);
        self.gate.release();
        result
    }

    fn complete_guarded(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
        timeout: Duration,
        attempts: &mut Vec<String>,
    ) -> Result<Completion> {
        for attempt in 0..=self.endpoint.max_retries {
            if attempt > 0 {
                (self.sleep)(backoff_delay(attempt - 1));
            }
            match self.transport.post_json(url, api_key, body, timeout) {
                Ok(resp) if resp.status == 200 => return parse_completion(&resp.body),
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    attempts.push(format!("attempt {}: http {}", attempt + 1, resp.status));
                }
                Ok(resp) => {
                    return Err(Error::Request(format!(
                        "endpoint {}: http {} (not retried): {}",
                        self.endpoint.name, resp.status, resp.body
                    )));
                }
                Err(failure) => {
                    attempts.push(format!("attempt {}: {failure}", attempt + 1));
                }
            }
        }
        Err(Error::Endpoint(format!(
            "endpoint {}: retries exhausted after {} attempts [{}]",
            self.endpoint.name,
            self.endpoint.max_retries + 1,
            attempts.join("; ")
        )))
    }

    /// Completes a batch with at most `max_in_flight` concurrent requests,
    /// returning per-prompt results in request order.
    pub fn complete_batch(
        &self,
        prompts: &[String],
        params: &SamplingParams,
    ) -> Vec<Result<Completion>> {
        std::thread::scope(|scope| {
            let handles: Vec<_> = prompts
                .iter()
                .map(|prompt| scope.spawn(move || self.complete(prompt, params)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("completion worker panicked")).collect()
        })
    }
}

fn parse_completion(body: &serde_json::Value) -> Result<Completion> {
    let text = body["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| Error::Endpoint(format!("malformed completion payload: {body}")))?
        .to_string();
    Ok(Completion {
        text,
        prompt_tokens: body["usage"]["prompt_tokens"].as_u64(),
        completion_tokens: body["usage"]["completion_tokens"].as_u64(),
    })
}

/// Scalar-scorer client with a per-run cache, so each (query, response) is
/// scored exactly once.
pub struct ScoreClient {
    endpoint: EndpointConfig,
    transport: Arc<dyn Transport>,
    cache: Mutex<HashMap<(String, String), f64>>,
}

impl ScoreClient {
    pub fn new(endpoint: EndpointConfig, transport: Arc<dyn Transport>) -> Result<Self> {
        endpoint.validate()?;
        Ok(Self { endpoint, transport, cache: Mutex::new(HashMap::new()) })
    }

    pub fn score(&self, query: &str, response: &str) -> Result<f64> {
        let key = (query.to_string(), response.to_string());
        if let Some(&score) = self.cache.lock().unwrap().get(&key) {
            return Ok(score);
        }
        let api_key = self.endpoint.api_key()?;
        let body = serde_json::json!({
            "model": self.endpoint.model_id,
            "query": query,
            "response": response,
        });
        let url = format!("{}/v1/score", self.endpoint.base_url.trim_end_matches('/'));
        let timeout = Duration::from_secs(self.endpoint.timeout_secs);
        let resp = self
            .transport
            .post_json(&url, api_key.as_deref(), &body, timeout)
            .map_err(|f| Error::Scorer(format!("endpoint {}: {f}", self.endpoint.name)))?;
        if resp.status != 200 {
            return Err(Error::Scorer(format!(
                "endpoint {}: http {}: {}",
                self.endpoint.name, resp.status, resp.body
            )));
        }
        let score = resp.body["score"]
            .as_f64()
            .ok_or_else(|| Error::Scorer(format!("non-numeric score payload: {}", resp.body)))?;
        if !score.is_finite() {
            return Err(Error::Scorer(format!("non-finite score {score}")));
        }
        self.cache.lock().unwrap().insert(key, score);
        Ok(score)
    }
}
