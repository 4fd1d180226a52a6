//! Completion providers: a configurable HTTP client for chat-completion
//! style endpoints, a deterministic mock for offline runs, and
//! record/replay wrappers for fixtures.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{fnv1a64, splitmix64};
use crate::http::{json_path, post_json, HttpFailure};

use super::GenerationRequest;

/// A provider response plus transport accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub attempts: u32,
    /// Measured transport time; zero for deterministic providers so that
    /// offline runs are byte-reproducible.
    pub latency: Duration,
}

pub trait CompletionProvider: Send + Sync {
    fn complete(&self, request: &GenerationRequest) -> Result<Completion>;
    fn name(&self) -> &'static str;
}

// ---------------------------------------------------------------------------
// Mock provider
// ---------------------------------------------------------------------------

/// Deterministic offline provider: the output is a pure function of a
/// stable hash of the prompt text, shaped like a short summary sentence.
#[derive(Debug, Default, Clone)]
pub struct MockProvider;

const MOCK_WORDS: &[&str] = &[
    "the", "a", "given", "specified", "returns", "adds", "removes", "updates", "checks",
    "creates", "list", "tree", "node", "value", "item", "map", "string", "buffer", "stream",
    "result", "element", "key", "entry", "count", "index", "cache", "file", "data",
];

impl MockProvider {
    pub fn output_for(prompt_text: &str) -> String {
        let mut state = fnv1a64(prompt_text.as_bytes());
        let word_count = 6 + (splitmix64(&mut state) % 7) as usize;
        let mut words = Vec::with_capacity(word_count);
        for _ in 0..word_count {
            let pick = (splitmix64(&mut state) % MOCK_WORDS.len() as u64) as usize;
            words.push(MOCK_WORDS[pick]);
        }
        let mut sentence = words.join(" ");
        if let Some(first) = sentence.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        sentence.push('.');
        sentence
    }
}

impl CompletionProvider for MockProvider {
    fn complete(&self, request: &GenerationRequest) -> Result<Completion> {
        Ok(Completion {
            text: Self::output_for(&request.prompt_text),
            attempts: 1,
            latency: Duration::ZERO,
        })
    }

    fn name(&self) -> &'static str {
        "mock"
    }
}

// ---------------------------------------------------------------------------
// HTTP provider
// ---------------------------------------------------------------------------

/// How to shape request bodies and where to find the completion text, so
/// any chat-completion-style endpoint can be targeted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldMapping {
    /// "chat" posts a messages array; "completion" posts a prompt string.
    pub style: String,
    pub model_field: String,
    pub prompt_field: String,
    pub temperature_field: String,
    pub max_tokens_field: String,
    /// Dot path to the completion text in the response body.
    pub response_path: String,
}

impl Default for FieldMapping {
    fn default() -> Self {
        FieldMapping {
            style: "chat".into(),
            model_field: "model".into(),
            prompt_field: "prompt".into(),
            temperature_field: "temperature".into(),
            max_tokens_field: "max_tokens".into(),
            response_path: "choices.0.message.content".into(),
        }
    }
}

impl FieldMapping {
    fn body(&self, request: &GenerationRequest) -> serde_json::Value {
        let mut body = serde_json::Map::new();
        body.insert(
            self.model_field.clone(),
            serde_json::Value::String(request.model_name.clone()),
        );
        if self.style == "chat" {
            body.insert(
                "messages".into(),
                serde_json::json!([{ "role": "user", "content": request.prompt_text }]),
            );
        } else {
            body.insert(
                self.prompt_field.clone(),
                serde_json::Value::String(request.prompt_text.clone()),
            );
        }
        if !self.temperature_field.is_empty() {
            body.insert(
                self.temperature_field.clone(),
                serde_json::json!(request.temperature),
            );
        }
        if !self.max_tokens_field.is_empty() {
            body.insert(
                self.max_tokens_field.clone(),
                serde_json::json!(request.max_tokens),
            );
        }
        if !request.stop_sequences.is_empty() {
            body.insert("stop".into(), serde_json::json!(request.stop_sequences));
        }
        serde_json::Value::Object(body)
    }
}

/// Web endpoint client with exponential backoff on transport and 5xx
/// failures. Auth failures (401/403) are configuration errors and abort
/// the run.
pub struct HttpProvider {
    pub url: String,
    pub auth_token: Option<String>,
    pub mapping: FieldMapping,
    /// First backoff delay; doubles per retry. Kept small in tests.
    pub backoff_base: Duration,
}

impl HttpProvider {
    pub fn new(url: impl Into<String>, auth_token: Option<String>) -> Self {
        HttpProvider {
            url: url.into(),
            auth_token,
            mapping: FieldMapping::default(),
            backoff_base: Duration::from_millis(250),
        }
    }

    /// Read the token from the named environment variable, if set.
    pub fn auth_from_env(var: &str) -> Option<String> {
        std::env::var(var).ok().filter(|v| !v.is_empty())
    }
}

impl CompletionProvider for HttpProvider {
    fn complete(&self, request: &GenerationRequest) -> Result<Completion> {
        let body = self.mapping.body(request);
        let start = Instant::now();
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            let outcome = post_json(
                &self.url,
                self.auth_token.as_deref(),
                &body,
                request.timeout,
            );
            match outcome {
                Ok(response) => {
                    let text = json_path(&response, &self.mapping.response_path)
                        .and_then(|v| v.as_str())
                        .map(|s| s.to_string())
                        .ok_or_else(|| Error::Generation {
                            attempts,
                            message: format!(
                                "response missing field {}",
                                self.mapping.response_path
                            ),
                        })?;
                    return Ok(Completion {
                        text,
                        attempts,
                        latency: start.elapsed(),
                    });
                }
                Err(HttpFailure::Status(code)) if code == 401 || code == 403 => {
                    return Err(Error::Config(format!(
                        "endpoint {} rejected credentials with status {code}",
                        self.url
                    )));
                }
                Err(HttpFailure::Status(code)) if (400..500).contains(&code) => {
                    // Non-auth 4xx will not improve on retry.
                    return Err(Error::Generation {
                        attempts,
                        message: format!("http status {code}"),
                    });
                }
                Err(failure) => {
                    if attempts > request.retries {
                        return Err(Error::Generation {
                            attempts,
                            message: failure.to_string(),
                        });
                    }
                    let backoff = self.backoff_base * 2u32.pow(attempts - 1);
                    std::thread::sleep(backoff);
                }
            }
        }
    }

    fn name(&self) -> &'static str {
        "http"
    }
}

// ---------------------------------------------------------------------------
// Record / replay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordedResponse {
    pub prompt_hash: String,
    pub response: String,
}

fn prompt_hash(prompt_text: &str) -> String {
    format!("{:016x}", fnv1a64(prompt_text.as_bytes()))
}

/// Wraps another provider and captures (prompt hash, response) pairs for a
/// replayable fixture.
pub struct RecordingProvider<'a> {
    inner: &'a dyn CompletionProvider,
    recorded: Mutex<BTreeMap<String, String>>,
}

impl<'a> RecordingProvider<'a> {
    pub fn new(inner: &'a dyn CompletionProvider) -> Self {
        RecordingProvider {
            inner,
            recorded: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let recorded = self.recorded.lock().unwrap();
        let rows: Vec<RecordedResponse> = recorded
            .iter()
            .map(|(prompt_hash, response)| RecordedResponse {
                prompt_hash: prompt_hash.clone(),
                response: response.clone(),
            })
            .collect();
        crate::jsonl::write_jsonl(path, &rows)
    }
}

impl CompletionProvider for RecordingProvider<'_> {
    fn complete(&self, request: &GenerationRequest) -> Result<Completion> {
        let completion = self.inner.complete(request)?;
        self.recorded
            .lock()
            .unwrap()
            .insert(prompt_hash(&request.prompt_text), completion.text.clone());
        Ok(completion)
    }

    fn name(&self) -> &'static str {
        "recording"
    }
}

/// Serves responses from a recorded fixture; unknown prompts fail.
pub struct ReplayProvider {
    responses: BTreeMap<String, String>,
}

impl ReplayProvider {
    pub fn load(path: &Path) -> Result<Self> {
        let rows: Vec<RecordedResponse> = crate::jsonl::read_jsonl(path)?;
        Ok(ReplayProvider {
            responses: rows
                .into_iter()
                .map(|r| (r.prompt_hash, r.response))
                .collect(),
        })
    }
}

impl CompletionProvider for ReplayProvider {
    fn complete(&self, request: &GenerationRequest) -> Result<Completion> {
        let key = prompt_hash(&request.prompt_text);
        match self.responses.get(&key) {
            Some(text) => Ok(Completion {
                text: text.clone(),
                attempts: 1,
                latency: Duration::ZERO,
            }),
            None => Err(Error::Generation {
                attempts: 1,
                message: format!("no recorded response for prompt hash {key}"),
            }),
        }
    }

    fn name(&self) -> &'static str {
        "replay"
    }
}
