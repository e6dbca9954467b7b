//! Remote completion-API client with retries, optional logprob scoring, and
//! a JSONL response cache keyed by (model, prompt hash) so reruns are
//! budget-free.
//!
//! The wire protocol is a plain completion-style HTTP JSON API (see the
//! README for the schema); any compatible gateway works. Requests are
//! stateless, so retrying is always safe.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use crate::constants::ConstantSets;
use crate::error::{Error, Result};
use crate::evaluator::{Outcome, PointEvaluator};
use crate::format::FormatAst;
use crate::metrics::{self, EvalRecord, Metric};
use crate::prompt;
use crate::task::{DataInstance, TaskSpec};

/// Environment variable holding the API auth token.
pub const TOKEN_ENV: &str = "FORMATPROBE_API_TOKEN";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token: Option<String>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
}

fn default_max_tokens() -> u32 {
    20
}
fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_parallelism() -> usize {
    4
}

// --- wire schema -----------------------------------------------------------

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: u32,
    echo: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    logprobs: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Choice {
    #[serde(default)]
    text: String,
    #[serde(default)]
    logprobs: Option<Logprobs>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Logprobs {
    tokens: Vec<String>,
    token_logprobs: Vec<Option<f64>>,
    text_offset: Vec<usize>,
}

// --- cache -----------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    value: CompletionResponse,
}

struct Cache {
    entries: HashMap<String, CompletionResponse>,
    writer: std::fs::File,
}

impl Cache {
    fn open(path: &PathBuf) -> Result<Cache> {
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(std::fs::File::open(path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: CacheLine = serde_json::from_str(&line)?;
                entries.insert(parsed.key, parsed.value);
            }
        }
        let writer = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Cache { entries, writer })
    }

    fn insert(&mut self, key: String, value: CompletionResponse) -> Result<()> {
        let line = serde_json::to_string(&CacheLine {
            key: key.clone(),
            value: value.clone(),
        })?;
        writeln!(self.writer, "{line}")?;
        self.entries.insert(key, value);
        Ok(())
    }
}

/// Cache key: model and prompt content, nothing else, so only a model change
/// invalidates entries.
fn cache_key(model: &str, kind: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model.as_bytes());
    hasher.update([0x1f]);
    hasher.update(kind.as_bytes());
    hasher.update([0x1f]);
    hasher.update(prompt.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

// --- concurrency gate ------------------------------------------------------

struct Gate {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Gate {
        Gate {
            permits: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.cv.wait(permits).unwrap();
        }
        *permits -= 1;
        drop(permits);
        let out = f();
        *self.permits.lock().unwrap() += 1;
        self.cv.notify_one();
        out
    }
}

// --- client ----------------------------------------------------------------

pub struct RemoteClient {
    cfg: RemoteConfig,
    http: reqwest::blocking::Client,
    cache: Option<Mutex<Cache>>,
    gate: Gate,
    remote_calls: AtomicU64,
}

impl RemoteClient {
    pub fn new(cfg: RemoteConfig) -> Result<RemoteClient> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        let cache = match &cfg.cache_path {
            Some(path) => Some(Mutex::new(Cache::open(path)?)),
            None => None,
        };
        Ok(RemoteClient {
            gate: Gate::new(cfg.parallelism),
            cache,
            http,
            remote_calls: AtomicU64::new(0),
            cfg,
        })
    }

    /// Number of requests that actually hit the network (cache misses).
    pub fn remote_calls(&self) -> u64 {
        self.remote_calls.load(Ordering::Relaxed)
    }

    fn token(&self) -> Option<String> {
        self.cfg
            .auth_token
            .clone()
            .or_else(|| std::env::var(TOKEN_ENV).ok())
    }

    fn post(&self, request: &CompletionRequest, kind: &str) -> Result<CompletionResponse> {
        let key = cache_key(&self.cfg.model, kind, request.prompt);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.lock().unwrap().entries.get(&key) {
                return Ok(hit.clone());
            }
        }
        let response = self.gate.run(|| self.post_with_retries(request))?;
        if let Some(cache) = &self.cache {
            cache.lock().unwrap().insert(key, response.clone())?;
        }
        Ok(response)
    }

    fn post_with_retries(&self, request: &CompletionRequest) -> Result<CompletionResponse> {
        let url = format!("{}/v1/completions", self.cfg.endpoint.trim_end_matches('/'));
        let mut last_error = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50 * attempt as u64));
            }
            let mut builder = self.http.post(&url).json(request);
            if let Some(token) = self.token() {
                builder = builder.bearer_auth(token);
            }
            self.remote_calls.fetch_add(1, Ordering::Relaxed);
            match builder.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_server_error() {
                        last_error = format!("server error {status}");
                        continue;
                    }
                    if !status.is_success() {
                        return Err(Error::Protocol(format!(
                            "unexpected status {status}: {}",
                            resp.text().unwrap_or_default()
                        )));
                    }
                    return resp
                        .json::<CompletionResponse>()
                        .map_err(|e| Error::Protocol(format!("malformed response: {e}")));
                }
                Err(e) => {
                    last_error = e.to_string();
                }
            }
        }
        Err(Error::Transport {
            retries: self.cfg.max_retries,
            message: last_error,
        })
    }

    /// Model continuation for a prompt, truncated at `max_tokens`.
    pub fn generate(&self, prompt: &str) -> Result<String> {
        if prompt.is_empty() {
            return Err(Error::Config("prompt must be non-empty".into()));
        }
        let response = self.post(
            &CompletionRequest {
                model: &self.cfg.model,
                prompt,
                max_tokens: self.cfg.max_tokens,
                echo: false,
                logprobs: None,
            },
            "generate",
        )?;
        response
            .choices
            .first()
            .map(|c| c.text.clone())
            .ok_or_else(|| Error::Protocol("response has no choices".into()))
    }

    /// Log-likelihood of each option continuation, via token-logprob echo.
    /// Scores are summed token log-probabilities; no length normalization.
    pub fn score_options(&self, prompt: &str, options: &[String]) -> Result<HashMap<String, f64>> {
        if options.is_empty() {
            return Err(Error::Config("options must be non-empty".into()));
        }
        for (i, o) in options.iter().enumerate() {
            if options[..i].contains(o) {
                return Err(Error::Config(format!("duplicate option {o:?}")));
            }
        }
        let mut scores = HashMap::new();
        for option in options {
            let full = format!("{prompt}{option}");
            let response = self.post(
                &CompletionRequest {
                    model: &self.cfg.model,
                    prompt: &full,
                    max_tokens: 0,
                    echo: true,
                    logprobs: Some(0),
                },
                "score",
            )?;
            let choice = response
                .choices
                .first()
                .ok_or_else(|| Error::Protocol("response has no choices".into()))?;
            let logprobs = choice.logprobs.as_ref().ok_or(Error::Capability)?;
            let mut total = 0.0;
            for (offset, lp) in logprobs.text_offset.iter().zip(&logprobs.token_logprobs) {
                if *offset >= prompt.len() {
                    total += lp.ok_or_else(|| {
                        Error::Protocol("null logprob inside the option span".into())
                    })?;
                }
            }
            scores.insert(option.clone(), total);
        }
        Ok(scores)
    }
}

// --- task-level evaluator --------------------------------------------------

/// Wraps the remote client into the per-data-point interface the search
/// consumes: build the prompt, query the model, score with the metric.
pub struct RemoteTaskEvaluator<'a> {
    pub client: RemoteClient,
    pub task: &'a TaskSpec,
    pub sets: &'a ConstantSets,
    pub metric: Metric,
    pub n_shots: usize,
    pub joiner: String,
    counter: AtomicU64,
    records: Mutex<Vec<EvalRecord>>,
}

impl<'a> RemoteTaskEvaluator<'a> {
    pub fn new(
        client: RemoteClient,
        task: &'a TaskSpec,
        sets: &'a ConstantSets,
        metric: Metric,
        n_shots: usize,
    ) -> Self {
        RemoteTaskEvaluator {
            client,
            task,
            sets,
            metric,
            n_shots,
            joiner: prompt::DEFAULT_JOINER.to_string(),
            counter: AtomicU64::new(0),
            records: Mutex::new(Vec::new()),
        }
    }

    pub fn take_records(&self) -> Vec<EvalRecord> {
        std::mem::take(&mut self.records.lock().unwrap())
    }
}

impl PointEvaluator for RemoteTaskEvaluator<'_> {
    fn evaluate(
        &self,
        format_id: &str,
        format: &FormatAst,
        instance: &DataInstance,
    ) -> Result<Outcome> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        let text =
            prompt::build_prompt(self.task, format, self.sets, self.n_shots, instance, &self.joiner)?;
        let gold = prompt::effective_gold(self.task, format, self.sets, instance);
        let options = prompt::effective_options(self.task, format, self.sets, instance);
        let outcome = match self.metric {
            Metric::Prefix => {
                let generation = self.client.generate(&text)?;
                let correct = metrics::prefix_match(&generation, &gold) == 1;
                let valid = if options.is_empty() {
                    correct
                } else {
                    metrics::matches_any_option(&generation, &options) == 1
                };
                Outcome {
                    correct,
                    valid,
                    raw: Some(generation),
                }
            }
            Metric::Ranking => {
                let scores = self.client.score_options(&text, &options)?;
                let correct = metrics::ranking_score(&options, &scores, &gold)? == 1;
                Outcome {
                    correct,
                    valid: true,
                    raw: None,
                }
            }
        };
        self.records.lock().unwrap().push(EvalRecord {
            format_id: format_id.to_string(),
            instance_id: instance.id.clone(),
            metric: self.metric,
            outcome: u8::from(outcome.correct),
            valid: u8::from(outcome.valid),
            raw: outcome.raw.clone(),
        });
        Ok(outcome)
    }

    fn evaluations(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }
}
