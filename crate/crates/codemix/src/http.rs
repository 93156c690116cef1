//! HTTP backends: a generic JSON sidecar protocol, OpenAI-compatible chat
//! completions (every text task is phrased as a prompt) and OpenAI-compatible
//! embeddings.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use codemix_core::providers::wire::{EmbeddingResponse, LabelResponse, ProviderRequest, TagsResponse, TextResponse};
use codemix_core::providers::{Direction, TaggedToken, WordLanguage};
use codemix_core::{LanguagePair, ProviderError};
use serde_json::{json, Value};

use crate::transport::Transport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HttpKind {
    /// `POST {endpoint}/{task}` with the canonical request as the body; the
    /// reply is the canonical response.
    GenericJson,
    OpenAiChat,
    OpenAiEmbeddings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpSettings {
    pub endpoint: String,
    pub model: Option<String>,
    /// Environment variable holding a bearer token.
    pub auth_env: Option<String>,
    pub rate_limit_per_sec: Option<f64>,
    pub max_in_flight: usize,
    pub timeout: Duration,
    pub retries: u32,
    pub retry_backoff: Duration,
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            endpoint: String::new(),
            model: None,
            auth_env: None,
            rate_limit_per_sec: None,
            max_in_flight: 4,
            timeout: Duration::from_secs(60),
            retries: 2,
            retry_backoff: Duration::from_millis(500),
        }
    }
}

/// Bounds concurrent requests and spaces request starts.
#[derive(Debug)]
struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    max: usize,
    interval: Option<Duration>,
    next_start: Mutex<Instant>,
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

impl Limiter {
    fn new(max: usize, per_sec: Option<f64>) -> Self {
        Limiter {
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            max: max.max(1),
            interval: per_sec.filter(|r| *r > 0.0).map(|r| Duration::from_secs_f64(1.0 / r)),
            next_start: Mutex::new(Instant::now()),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.max {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        drop(n);
        if let Some(interval) = self.interval {
            let wait = {
                let mut next = self.next_start.lock().unwrap();
                let now = Instant::now();
                let start = (*next).max(now);
                *next = start + interval;
                start - now
            };
            if !wait.is_zero() {
                thread::sleep(wait);
            }
        }
        Permit(self)
    }
}

pub struct HttpBackend {
    id: String,
    kind: HttpKind,
    settings: HttpSettings,
    agent: ureq::Agent,
    limiter: Limiter,
}

fn language_name(code: &str) -> String {
    match code {
        "en" => "English".into(),
        other => match LanguagePair::from_matrix(other) {
            Ok(pair) => capitalize(pair.matrix_name()),
            Err(_) => other.into(),
        },
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn retryable(e: &ProviderError) -> bool {
    match e {
        ProviderError::Transport(_) => true,
        ProviderError::Http { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

fn strip_fences(s: &str) -> &str {
    let t = s.trim();
    let t = t.strip_prefix("```json").or_else(|| t.strip_prefix("```")).unwrap_or(t);
    t.strip_suffix("```").unwrap_or(t).trim()
}

impl HttpBackend {
    pub fn new(id: &str, kind: HttpKind, settings: HttpSettings) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(settings.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend {
            id: id.into(),
            kind,
            limiter: Limiter::new(settings.max_in_flight, settings.rate_limit_per_sec),
            settings,
            agent,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.settings.endpoint.trim_end_matches('/'), path)
    }

    fn post_once(&self, url: &str, body: &Value) -> Result<Value, ProviderError> {
        let mut request = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(var) = &self.settings.auth_env {
            let token = std::env::var(var)
                .map_err(|_| ProviderError::InvalidRequest(format!("environment variable {var} is not set")))?;
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Http { status, body: text });
        }
        serde_json::from_str(&text).map_err(|e| ProviderError::Schema(format!("response is not JSON: {e}")))
    }

    /// POSTs with the in-flight and rate limits, retrying transport errors,
    /// 429 and 5xx with exponential backoff.
    fn post(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let url = self.url(path);
        let mut attempt = 0;
        loop {
            let result = {
                let _permit = self.limiter.acquire();
                self.post_once(&url, body)
            };
            match result {
                Err(e) if retryable(&e) && attempt < self.settings.retries => {
                    let delay = self.settings.retry_backoff * 2u32.saturating_pow(attempt);
                    log::warn!("{}: {e}; retrying in {delay:?}", self.id);
                    thread::sleep(delay.min(Duration::from_secs(30)));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn model(&self) -> Result<&str, ProviderError> {
        self.settings
            .model
            .as_deref()
            .ok_or_else(|| ProviderError::InvalidRequest(format!("backend `{}` has no model", self.id)))
    }

    fn chat(&self, prompt: &str, temperature: f64) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.model()?,
            "temperature": temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let reply = self.post("chat/completions", &body)?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(|s| s.trim().to_string())
            .ok_or_else(|| ProviderError::Schema("no choices[0].message.content".into()))
    }

    fn chat_task(&self, request: &ProviderRequest) -> Result<Value, ProviderError> {
        let text = |t: String| Ok(json!(TextResponse { text: t }));
        match request {
            ProviderRequest::Complete(r) => text(self.chat(&r.prompt, r.temperature)?),
            ProviderRequest::Translate { text: t, src, dst } => text(self.chat(
                &format!(
                    "Translate the following text from {} to {}. Reply with the translation only.\n\n{t}",
                    language_name(src),
                    language_name(dst)
                ),
                0.0,
            )?),
            ProviderRequest::TranslateWordPos { word, pos, src, dst } => text(self.chat(
                &format!(
                    "Translate the {} word \"{word}\", used with part-of-speech tag {pos}, into {}. Reply with a single word only.",
                    language_name(src),
                    language_name(dst)
                ),
                0.0,
            )?),
            ProviderRequest::Transliterate { text: t, pair, direction } => {
                let name = language_name(pair.strip_prefix("en-").unwrap_or(pair));
                let prompt = match direction {
                    Direction::ToMatrixScript => format!(
                        "Transliterate this romanized {name} text into the native {name} script, word by word, keeping the number of words. Reply with the transliteration only.\n\n{t}"
                    ),
                    Direction::ToRoman => format!(
                        "Transliterate this {name} text into Latin script the way it is commonly typed online, word by word, keeping the number of words. Reply with the transliteration only.\n\n{t}"
                    ),
                };
                text(self.chat(&prompt, 0.0)?)
            }
            ProviderRequest::Identify { word, pair } => {
                let name = language_name(pair.strip_prefix("en-").unwrap_or(pair));
                let reply = self.chat(
                    &format!("Is the word \"{word}\" English or {name}? Reply with exactly one word: English or {name}."),
                    0.0,
                )?;
                let reply = reply.to_lowercase();
                let label = if reply.contains("english") {
                    WordLanguage::English
                } else if reply.contains(&name.to_lowercase()) {
                    WordLanguage::Matrix
                } else {
                    return Err(ProviderError::Schema(format!("unrecognized language label `{reply}`")));
                };
                Ok(json!(LabelResponse { label }))
            }
            ProviderRequest::Tag { sentence } => {
                let reply = self.chat(
                    &format!(
                        "Give the Penn Treebank part-of-speech tag of every word in the sentence below. Reply only with a JSON array of [word, tag] pairs.\n\n{sentence}"
                    ),
                    0.0,
                )?;
                let pairs: Vec<(String, String)> = serde_json::from_str(strip_fences(&reply))
                    .map_err(|e| ProviderError::Schema(format!("tagger reply: {e}")))?;
                let tokens = pairs.into_iter().map(|(token, tag)| TaggedToken { token, tag }).collect();
                Ok(json!(TagsResponse { tokens }))
            }
            ProviderRequest::Embed { .. } => Err(ProviderError::InvalidRequest(format!(
                "backend `{}` (chat) cannot embed sentences",
                self.id
            ))),
        }
    }

    fn embeddings(&self, request: &ProviderRequest) -> Result<Value, ProviderError> {
        let ProviderRequest::Embed { sentence } = request else {
            return Err(ProviderError::InvalidRequest(format!(
                "backend `{}` only embeds sentences, got a {} request",
                self.id,
                request.task()
            )));
        };
        let reply = self.post("embeddings", &json!({"model": self.model()?, "input": sentence}))?;
        let values: Vec<f64> = reply
            .pointer("/data/0/embedding")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| ProviderError::Schema(e.to_string()))?
            .ok_or_else(|| ProviderError::Schema("no data[0].embedding".into()))?;
        Ok(json!(EmbeddingResponse { values }))
    }
}

impl Transport for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn call(&self, request: &ProviderRequest) -> Result<Value, ProviderError> {
        match self.kind {
            HttpKind::GenericJson => {
                let body = serde_json::to_value(request).map_err(|e| ProviderError::InvalidRequest(e.to_string()))?;
                self.post(request.task().as_str(), &body)
            }
            HttpKind::OpenAiChat => self.chat_task(request),
            HttpKind::OpenAiEmbeddings => self.embeddings(request),
        }
    }
}
