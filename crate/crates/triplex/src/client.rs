//! HTTP chat and embedding client.
//!
//! Every request passes through a FIFO gate admitting at most
//! `max_parallel_requests` at once. Network errors, 408, 429, 5xx and
//! undecodable bodies are retried with exponential backoff; any other 4xx is
//! fatal.

use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::{json, Value};
use triplex_core::backend::check_embed_input;
use triplex_core::hash::Fingerprint;
use triplex_core::mock::{MockChat, MockEmbedder, MOCK_EMBEDDING_DIM};
use triplex_core::{CompletionError, Completer, Embedder, EmbeddingVector};

use crate::config::{BackendKind, EndpointConfig, ProfileStyle};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Sends one POST. `Err` is a network-level failure.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        Self { agent: ureq::Agent::new_with_config(config) }
    }
}

impl Transport for UreqTransport {
    fn post(&self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpResponse, String> {
        let mut req = self.agent.post(url).header("content-type", "application/json");
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Counting semaphore with first-come first-served admission.
#[derive(Debug)]
pub struct Gate {
    limit: usize,
    state: Mutex<GateState>,
    wake: Condvar,
}

#[derive(Debug, Default)]
struct GateState {
    next_ticket: u64,
    now_serving: u64,
    in_flight: usize,
}

pub struct Permit<'a> {
    gate: &'a Gate,
}

impl Gate {
    pub fn new(limit: usize) -> Self {
        assert!(limit >= 1, "gate limit must be at least 1");
        Self { limit, state: Mutex::new(GateState::default()), wake: Condvar::new() }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut s = self.state.lock().expect("gate lock poisoned");
        let ticket = s.next_ticket;
        s.next_ticket += 1;
        while !(s.now_serving == ticket && s.in_flight < self.limit) {
            s = self.wake.wait(s).expect("gate lock poisoned");
        }
        s.now_serving += 1;
        s.in_flight += 1;
        self.wake.notify_all();
        Permit { gate: self }
    }

    pub fn in_flight(&self) -> usize {
        self.state.lock().expect("gate lock poisoned").in_flight
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut s = self.gate.state.lock().expect("gate lock poisoned");
        s.in_flight -= 1;
        self.gate.wake.notify_all();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct LatencySummary {
    pub requests: usize,
    pub mean_ms: f64,
    pub max_ms: f64,
}

enum Attempt {
    Done(Value),
    Retry(String),
    Fatal(String),
}

pub struct HttpClient {
    config: EndpointConfig,
    transport: Arc<dyn Transport>,
    gate: Gate,
    latencies: Mutex<Vec<Duration>>,
    headers: Vec<(String, String)>,
}

impl HttpClient {
    pub fn new(config: EndpointConfig) -> Self {
        let transport = Arc::new(UreqTransport::new(Duration::from_millis(config.timeout_ms)));
        Self::with_transport(config, transport)
    }

    pub fn with_transport(config: EndpointConfig, transport: Arc<dyn Transport>) -> Self {
        let mut headers = Vec::new();
        if let Some(var) = &config.profile.api_key_env {
            if let Ok(key) = std::env::var(var) {
                headers.push(("authorization".to_string(), format!("Bearer {key}")));
            }
        }
        Self {
            gate: Gate::new(config.max_parallel_requests.max(1)),
            config,
            transport,
            latencies: Mutex::new(Vec::new()),
            headers,
        }
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn latency_summary(&self) -> LatencySummary {
        let l = self.latencies.lock().expect("latency lock poisoned");
        if l.is_empty() {
            return LatencySummary::default();
        }
        let ms: Vec<f64> = l.iter().map(|d| d.as_secs_f64() * 1000.0).collect();
        LatencySummary {
            requests: ms.len(),
            mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
            max_ms: ms.iter().copied().fold(0.0, f64::max),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    fn attempt(&self, url: &str, body: &str) -> Attempt {
        let start = Instant::now();
        let result = self.transport.post(url, &self.headers, body);
        self.latencies.lock().expect("latency lock poisoned").push(start.elapsed());
        match result {
            Err(e) => Attempt::Retry(e),
            Ok(r) if (200..300).contains(&r.status) => match serde_json::from_str(&r.body) {
                Ok(v) => Attempt::Done(v),
                Err(e) => Attempt::Retry(format!("undecodable response: {e}")),
            },
            Ok(r) if r.status == 408 || r.status == 429 || r.status >= 500 => {
                Attempt::Retry(format!("HTTP {}", r.status))
            }
            Ok(r) if (400..500).contains(&r.status) => {
                Attempt::Fatal(format!("HTTP {} from {url}: {}", r.status, truncate(&r.body, 200)))
            }
            Ok(r) => Attempt::Retry(format!("unexpected HTTP {}", r.status)),
        }
    }

    /// Posts `body` with retries, then extracts a value with `pick`.
    fn post_json<T>(&self, path: &str, body: &Value, pick: impl Fn(&Value) -> Option<T>) -> Result<T, CompletionError> {
        let url = self.url(path);
        let body = body.to_string();
        let _permit = self.gate.acquire();
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.attempt(&url, &body) {
                Attempt::Done(v) => match pick(&v) {
                    Some(t) => return Ok(t),
                    None => last = format!("response missing expected fields: {}", truncate(&v.to_string(), 200)),
                },
                Attempt::Retry(m) => last = m,
                Attempt::Fatal(m) => return Err(CompletionError::Fatal(m)),
            }
            log::debug!("attempt {} to {url} failed: {last}", attempt + 1);
        }
        Err(CompletionError::Transient(format!("{} attempts to {url}; last error: {last}", self.config.max_retries + 1)))
    }

    fn chat_body(&self, prompt: &str) -> Value {
        let c = &self.config;
        let messages = json!([{ "role": "user", "content": prompt }]);
        match c.profile.style {
            ProfileStyle::Ollama => {
                let mut options = json!({ "temperature": c.temperature, "num_predict": c.max_tokens });
                if let Some(seed) = c.seed {
                    options["seed"] = json!(seed);
                }
                json!({ "model": c.model_name, "messages": messages, "stream": false, "options": options })
            }
            ProfileStyle::Openai => {
                let mut body = json!({
                    "model": c.model_name,
                    "messages": messages,
                    "temperature": c.temperature,
                    "max_tokens": c.max_tokens,
                });
                if let Some(seed) = c.seed {
                    body["seed"] = json!(seed);
                }
                body
            }
        }
    }

    fn embed_batch(&self, batch: &[String]) -> Result<Vec<Vec<f64>>, CompletionError> {
        let c = &self.config;
        let path = c.profile.embed_path();
        match c.profile.style {
            ProfileStyle::Ollama => {
                let body = json!({ "model": c.embedding_model, "prompt": batch[0] });
                let v = self.post_json(path, &body, |v| float_array(v.get("embedding")?))?;
                Ok(vec![v])
            }
            ProfileStyle::Openai => {
                let body = json!({ "model": c.embedding_model, "input": batch });
                let n = batch.len();
                self.post_json(path, &body, |v| {
                    let data = v.get("data")?.as_array()?;
                    let mut rows: Vec<(u64, Vec<f64>)> = data
                        .iter()
                        .enumerate()
                        .map(|(i, d)| {
                            let idx = d.get("index").and_then(Value::as_u64).unwrap_or(i as u64);
                            Some((idx, float_array(d.get("embedding")?)?))
                        })
                        .collect::<Option<_>>()?;
                    rows.sort_by_key(|r| r.0);
                    (rows.len() == n).then(|| rows.into_iter().map(|r| r.1).collect())
                })
            }
        }
    }
}

fn truncate(s: &str, n: usize) -> String {
    match s.char_indices().nth(n) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

fn float_array(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(Value::as_f64).collect()
}

impl Completer for HttpClient {
    fn complete(&self, prompt: &str) -> Result<String, CompletionError> {
        if prompt.is_empty() {
            return Err(CompletionError::InvalidInput("empty prompt".into()));
        }
        let body = self.chat_body(prompt);
        let style = self.config.profile.style;
        self.post_json(self.config.profile.chat_path(), &body, |v| {
            let content = match style {
                ProfileStyle::Ollama => v.get("message")?.get("content")?,
                ProfileStyle::Openai => v.get("choices")?.get(0)?.get("message")?.get("content")?,
            };
            content.as_str().map(str::to_string)
        })
    }
}

impl Embedder for HttpClient {
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, CompletionError> {
        check_embed_input(texts)?;
        let size = match self.config.profile.style {
            ProfileStyle::Ollama => 1,
            ProfileStyle::Openai => self.config.profile.embed_batch_size.max(1),
        };
        let batches: Vec<Vec<Vec<f64>>> = texts
            .par_chunks(size)
            .map(|b| self.embed_batch(b))
            .collect::<Result<_, _>>()?;
        let mut out = Vec::with_capacity(texts.len());
        for values in batches.into_iter().flatten() {
            let v = EmbeddingVector::new(values)
                .map_err(|e| CompletionError::Fatal(format!("endpoint returned an unusable embedding: {e}")))?;
            if let Some(first) = out.first().map(EmbeddingVector::dimension) {
                if v.dimension() != first {
                    return Err(CompletionError::Fatal("embedding dimensions differ between inputs".into()));
                }
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// The model backend chosen for a run.
pub enum Backend {
    Mock { chat: MockChat, embedder: MockEmbedder },
    Live(Box<HttpClient>),
}

impl Backend {
    pub fn new(kind: BackendKind, endpoint: &EndpointConfig, seed: u64) -> Self {
        match kind {
            BackendKind::Mock => Backend::Mock { chat: MockChat::new(seed), embedder: MockEmbedder },
            BackendKind::Live => Backend::Live(Box::new(HttpClient::new(endpoint.clone()))),
        }
    }

    pub fn completer(&self) -> &(dyn Completer + Sync) {
        match self {
            Backend::Mock { chat, .. } => chat,
            Backend::Live(c) => c.as_ref(),
        }
    }

    pub fn embedder(&self) -> &(dyn Embedder + Sync) {
        match self {
            Backend::Mock { embedder, .. } => embedder,
            Backend::Live(c) => c.as_ref(),
        }
    }

    /// Name recorded in the eval report.
    pub fn embedding_model(&self) -> String {
        match self {
            Backend::Mock { .. } => format!("mock-trigram-{MOCK_EMBEDDING_DIM}"),
            Backend::Live(c) => c.config.embedding_model.clone(),
        }
    }

    /// Identifies everything about the backend that can change its output.
    pub fn fingerprint(&self) -> String {
        let mut f = Fingerprint::new();
        match self {
            Backend::Mock { chat, .. } => {
                f.part(b"mock").part(&chat.seed.to_le_bytes());
            }
            Backend::Live(c) => {
                let e = &c.config;
                f.part(b"live")
                    .part(format!("{:?}", e.profile.style).as_bytes())
                    .part(e.base_url.as_bytes())
                    .part(e.profile.chat_path().as_bytes())
                    .part(e.model_name.as_bytes())
                    .part(&e.temperature.to_le_bytes())
                    .part(&e.max_tokens.to_le_bytes())
                    .part(format!("{:?}", e.seed).as_bytes());
            }
        }
        f.finish()
    }

    pub fn latency_summary(&self) -> Option<LatencySummary> {
        match self {
            Backend::Mock { .. } => None,
            Backend::Live(c) => Some(c.latency_summary()),
        }
    }
}
