//! Fabrication of AI abstracts from titles through a completion endpoint.
//!
//! The endpoint is abstract ([`CompletionEndpoint`]); [`HttpEndpoint`]
//! speaks a JSON-over-HTTP completion protocol and [`MockEndpoint`] answers
//! offline. [`Generator`] adds retry with exponential backoff and an
//! on-disk response cache so interrupted runs resume where they stopped.

mod cache;
mod http;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub use cache::ResponseCache;
pub use http::{HttpEndpoint, API_KEY_ENV, ENDPOINT_URL_ENV};

use crate::corpus::{title_key, AbstractRecord, DatasetFormat, Label, PairedDataset};
use crate::error::{Error, Result};

const PROMPT_PREFIX: &str = "Create an abstract for a scientific journal with a formal tone, academic language, \
and a background story of the topic in a unique paragraph with the title: ";

/// The generation prompt for one title (trimmed).
pub fn build_prompt(title: &str) -> Result<String> {
    let title = title.trim();
    if title.is_empty() {
        return Err(Error::InvalidArgument("cannot build a prompt for an empty title".into()));
    }
    Ok(format!("{PROMPT_PREFIX}{title}"))
}

/// Recovers the title from a prompt built by [`build_prompt`].
pub fn title_from_prompt(prompt: &str) -> Option<&str> {
    prompt.strip_prefix(PROMPT_PREFIX)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationParams {
    pub model_name: String,
    pub temperature: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            model_name: "davinci".into(),
            temperature: 0.9,
            frequency_penalty: 0.5,
            presence_penalty: 0.5,
            max_tokens: 512,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_tokens == 0 {
            return Err(Error::InvalidArgument("max_tokens must be positive".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::InvalidArgument("temperature must be finite and >= 0".into()));
        }
        if !self.frequency_penalty.is_finite() || !self.presence_penalty.is_finite() {
            return Err(Error::InvalidArgument("penalties must be finite".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(Error::InvalidArgument("model name is empty".into()));
        }
        Ok(())
    }

    pub fn request(&self, prompt: String) -> CompletionRequest {
        CompletionRequest {
            model: self.model_name.clone(),
            prompt,
            temperature: self.temperature,
            frequency_penalty: self.frequency_penalty,
            presence_penalty: self.presence_penalty,
            max_tokens: self.max_tokens,
        }
    }
}

/// Body of a completion call, serialized verbatim as the HTTP JSON payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndpointError {
    pub status: Option<u16>,
    pub message: String,
    pub transient: bool,
}

impl EndpointError {
    pub fn transient(status: Option<u16>, message: impl Into<String>) -> Self {
        EndpointError {
            status,
            message: message.into(),
            transient: true,
        }
    }

    pub fn fatal(status: Option<u16>, message: impl Into<String>) -> Self {
        EndpointError {
            status,
            message: message.into(),
            transient: false,
        }
    }

    /// 408, 429 and 5xx are worth retrying.
    pub fn from_status(status: u16, message: impl Into<String>) -> Self {
        if status == 408 || status == 429 || (500..600).contains(&status) {
            Self::transient(Some(status), message)
        } else {
            Self::fatal(Some(status), message)
        }
    }
}

pub trait CompletionEndpoint: Send + Sync {
    /// Stable identifier recorded as provenance.
    fn identifier(&self) -> String;

    fn complete(&self, request: &CompletionRequest) -> std::result::Result<String, EndpointError>;
}

/// Offline endpoint answering `ABSTRACT(<title>)`.
#[derive(Debug, Default, Clone)]
pub struct MockEndpoint;

impl CompletionEndpoint for MockEndpoint {
    fn identifier(&self) -> String {
        "mock".into()
    }

    fn complete(&self, request: &CompletionRequest) -> std::result::Result<String, EndpointError> {
        let title = title_from_prompt(&request.prompt).unwrap_or(&request.prompt);
        Ok(format!("ABSTRACT({title})"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            base_delay_ms: 1_000,
            max_delay_ms: 60_000,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay_ms: 0,
            max_delay_ms: 0,
        }
    }

    /// Delay before retry number `attempt` (0-based): base * 2^attempt, capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.min(32)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub endpoint: String,
    /// Seconds since the Unix epoch at which the completion was obtained.
    pub timestamp: u64,
    pub retries: u32,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedAbstract {
    pub title: String,
    pub text: String,
    pub params: GenerationParams,
    pub provenance: Provenance,
}

pub struct Generator<'a> {
    endpoint: &'a dyn CompletionEndpoint,
    params: GenerationParams,
    retry: RetryPolicy,
    cache: Option<ResponseCache>,
    sleep: fn(Duration),
}

impl<'a> Generator<'a> {
    pub fn new(endpoint: &'a dyn CompletionEndpoint, params: GenerationParams) -> Result<Self> {
        params.validate()?;
        Ok(Generator {
            endpoint,
            params,
            retry: RetryPolicy::default(),
            cache: None,
            sleep: std::thread::sleep,
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn params(&self) -> &GenerationParams {
        &self.params
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    pub fn generate(&self, title: &str) -> Result<GeneratedAbstract> {
        let prompt = build_prompt(title)?;
        let request = self.params.request(prompt);
        let endpoint = self.endpoint.identifier();

        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&request)? {
                return Ok(GeneratedAbstract {
                    title: title.trim().to_string(),
                    text: hit.text,
                    params: self.params.clone(),
                    provenance: Provenance {
                        endpoint: hit.endpoint,
                        timestamp: hit.timestamp,
                        retries: 0,
                        cached: true,
                    },
                });
            }
        }

        let mut attempt = 0u32;
        let text = loop {
            match self.endpoint.complete(&request) {
                Ok(text) => break text,
                Err(e) if !e.transient => {
                    return Err(Error::Endpoint {
                        endpoint,
                        status: e.status,
                        message: e.message,
                    })
                }
                Err(e) => {
                    if attempt >= self.retry.max_retries {
                        return Err(Error::RetriesExhausted {
                            attempts: attempt + 1,
                            last: match e.status {
                                Some(s) => format!("status {s}: {}", e.message),
                                None => e.message,
                            },
                        });
                    }
                    log::warn!("transient failure for `{}` ({}); retrying", title.trim(), e.message);
                    (self.sleep)(self.retry.delay(attempt));
                    attempt += 1;
                }
            }
        };
        if text.trim().is_empty() {
            return Err(Error::EmptyCompletion(title.trim().to_string()));
        }
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        if let Some(cache) = &self.cache {
            cache.put(&request, &text, &endpoint, timestamp)?;
        }
        Ok(GeneratedAbstract {
            title: title.trim().to_string(),
            text,
            params: self.params.clone(),
            provenance: Provenance {
                endpoint,
                timestamp,
                retries: attempt,
                cached: false,
            },
        })
    }

    /// Generates for every title with up to `workers` requests in flight.
    /// Results come back in input order.
    pub fn generate_all(&self, titles: &[String], workers: usize) -> Vec<Result<GeneratedAbstract>> {
        let workers = workers.clamp(1, titles.len().max(1));
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<GeneratedAbstract>>>> = titles.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= titles.len() {
                        break;
                    }
                    let result = self.generate(&titles[i]);
                    *slots[i].lock().unwrap() = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("every slot filled"))
            .collect()
    }
}

/// A human-written source abstract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanAbstract {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

/// Reads `id,title,abstract` rows (JSONL or CSV with header). Extra columns
/// such as `label` are ignored.
pub fn load_human_abstracts(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Vec<HumanAbstract>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    match format {
        DatasetFormat::Jsonl => {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let h: HumanAbstract = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
                    row: i + 1,
                    field: "<json>".into(),
                    message: e.to_string(),
                })?;
                out.push(h);
            }
        }
        DatasetFormat::Csv => {
            let mut rdr = csv::Reader::from_reader(file);
            for (i, row) in rdr.deserialize::<HumanAbstract>().enumerate() {
                out.push(row.map_err(|e| Error::MalformedRow {
                    row: i + 2,
                    field: "<csv>".into(),
                    message: e.to_string(),
                })?);
            }
        }
    }
    Ok(out)
}

/// Id given to the AI counterpart of a human record.
pub fn ai_record_id(human_id: &str) -> String {
    format!("{human_id}-ai")
}

/// Pairs each human abstract with the generation for the same title-key.
/// Every generation must match a human title and vice versa.
pub fn assemble_pairs(humans: &[HumanAbstract], generated: &[GeneratedAbstract]) -> Result<PairedDataset> {
    let mut by_key = std::collections::HashMap::new();
    for g in generated {
        if by_key.insert(title_key(&g.title), g).is_some() {
            return Err(Error::InvalidArgument(format!("two generations for title `{}`", g.title)));
        }
    }
    let human_keys: std::collections::HashSet<String> = humans.iter().map(|h| title_key(&h.title)).collect();
    let mut missing: Vec<String> = generated
        .iter()
        .filter(|g| !human_keys.contains(&title_key(&g.title)))
        .map(|g| g.title.clone())
        .collect();
    missing.extend(
        humans
            .iter()
            .filter(|h| !by_key.contains_key(&title_key(&h.title)))
            .map(|h| h.title.clone()),
    );
    if !missing.is_empty() {
        return Err(Error::IncompletePairs(missing));
    }

    let mut records = Vec::with_capacity(2 * humans.len());
    for h in humans {
        let g = by_key[&title_key(&h.title)];
        records.push(AbstractRecord::new(&h.id, &h.title, &h.abstract_text, Label::Human)?);
        records.push(AbstractRecord::new(ai_record_id(&h.id), &h.title, &g.text, Label::Ai)?);
    }
    PairedDataset::from_records(records, false)
}
