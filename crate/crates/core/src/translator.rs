//! Uniform client over candidate translators: local command templates and
//! remote HTTP JSON endpoints, with a persistent content-hash cache and a
//! shared token-bucket rate limiter.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::exec::TranslationRecord;
use crate::lang::Language;

/// Env var naming the translation cache directory.
pub const CACHE_ENV: &str = "SYNTAXPROBE_CACHE";

#[derive(Debug, Error)]
pub enum TranslatorError {
    #[error("translator command failed: {0}")]
    CommandFailed(String),
    #[error("translator endpoint returned HTTP {0}")]
    HttpError(u16),
    #[error("translator request failed: {0}")]
    Transport(String),
    #[error("translator returned an empty translation")]
    EmptyTranslation,
    #[error("translator config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Command backend: argv template with `{src_file}`, `{out_file}`,
/// `{src_lang}`, `{tgt_lang}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandBackend {
    pub argv: Vec<String>,
}

/// HTTP backend: JSON POST of {"model", "prompt"}; reply field configurable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpBackend {
    pub endpoint: String,
    /// Prompt template with `{src_lang}`, `{tgt_lang}`, `{code}`.
    pub prompt_template: String,
    /// Name of the env var holding the bearer token, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub requests_per_minute: Option<u32>,
    /// JSON field path of the reply text, dot-separated (default "text").
    #[serde(default = "default_response_field")]
    pub response_field: String,
}

fn default_timeout_s() -> u64 {
    60
}

fn default_max_retries() -> u32 {
    3
}

fn default_response_field() -> String {
    "text".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Command(CommandBackend),
    Http(HttpBackend),
}

/// A named translator. Exactly one backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatorConfig {
    pub model_id: String,
    #[serde(flatten)]
    pub backend: Backend,
}

impl TranslatorConfig {
    pub fn load(path: &Path) -> Result<Self, TranslatorError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| TranslatorError::BadConfig(e.to_string()))
    }
}

/// On-disk cache keyed by content hash of (model, src_lang, tgt_lang, source).
#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn at(dir: PathBuf) -> Result<Self, TranslatorError> {
        fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    pub fn from_env() -> Result<Option<Self>, TranslatorError> {
        match std::env::var(CACHE_ENV) {
            Ok(dir) if !dir.trim().is_empty() => Ok(Some(Cache::at(PathBuf::from(dir))?)),
            _ => Ok(None),
        }
    }

    pub fn key(model_id: &str, src_lang: Language, tgt_lang: Language, source: &str) -> String {
        let mut hasher = Sha256::new();
        for part in [model_id, src_lang.id(), tgt_lang.id(), source] {
            hasher.update((part.len() as u64).to_le_bytes());
            hasher.update(part.as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.dir.join(key)).ok()
    }

    /// Atomic write: temp file then rename.
    pub fn put(&self, key: &str, value: &str) -> Result<(), TranslatorError> {
        let tmp = self.dir.join(format!("{key}.tmp{}", std::process::id()));
        let mut file = fs::File::create(&tmp)?;
        file.write_all(value.as_bytes())?;
        file.sync_all()?;
        fs::rename(&tmp, self.dir.join(key))?;
        Ok(())
    }
}

/// Token-bucket limiter shared across workers; grants are spaced at
/// `60/requests_per_minute` seconds.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_free: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(requests_per_minute: u32) -> Self {
        RateLimiter {
            interval: Duration::from_secs_f64(60.0 / f64::from(requests_per_minute.max(1))),
            next_free: Mutex::new(None),
        }
    }

    /// Reserve the next slot, returning how long the caller must wait.
    pub fn reserve(&self, now: Instant) -> Duration {
        let mut next = self.next_free.lock().expect("limiter lock");
        let start = match *next {
            Some(t) if t > now => t,
            _ => now,
        };
        *next = Some(start + self.interval);
        start.saturating_duration_since(now)
    }

    pub fn acquire(&self) {
        let wait = self.reserve(Instant::now());
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

/// Strip a fenced code block if the reply is wrapped in one.
pub fn strip_code_fences(text: &str) -> String {
    let trimmed = text.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return text.to_string();
    };
    let Some(end) = rest.rfind("```") else {
        return text.to_string();
    };
    let inner = &rest[..end];
    // drop the language tag on the opening fence line
    match inner.split_once('\n') {
        Some((_tag, body)) => body.trim_end().trim_end_matches('\n').to_string(),
        None => inner.to_string(),
    }
}

/// A client holding config, optional cache and shared rate limiter.
pub struct TranslatorClient {
    pub config: TranslatorConfig,
    cache: Option<Cache>,
    limiter: Option<RateLimiter>,
    backend_calls: AtomicUsize,
}

impl TranslatorClient {
    pub fn new(config: TranslatorConfig, cache: Option<Cache>) -> Self {
        let limiter = match &config.backend {
            Backend::Http(http) => http.requests_per_minute.map(RateLimiter::new),
            Backend::Command(_) => None,
        };
        TranslatorClient {
            config,
            cache,
            limiter,
            backend_calls: AtomicUsize::new(0),
        }
    }

    /// Number of real backend invocations (cache misses) so far.
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::SeqCst)
    }

    /// Translate one source snippet, consulting the cache first.
    pub fn translate(
        &self,
        source: &str,
        src_lang: Language,
        tgt_lang: Language,
    ) -> Result<String, TranslatorError> {
        let key = Cache::key(&self.config.model_id, src_lang, tgt_lang, source);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&key) {
                return Ok(hit);
            }
        }
        if let Some(limiter) = &self.limiter {
            limiter.acquire();
        }
        self.backend_calls.fetch_add(1, Ordering::SeqCst);
        let raw = match &self.config.backend {
            Backend::Command(cmd) => run_command_backend(cmd, source, src_lang, tgt_lang)?,
            Backend::Http(http) => run_http_backend(http, &self.config.model_id, source, src_lang, tgt_lang)?,
        };
        let cleaned = strip_code_fences(&raw);
        if cleaned.trim().is_empty() {
            return Err(TranslatorError::EmptyTranslation);
        }
        if let Some(cache) = &self.cache {
            cache.put(&key, &cleaned)?;
        }
        Ok(cleaned)
    }
}

fn run_command_backend(
    backend: &CommandBackend,
    source: &str,
    src_lang: Language,
    tgt_lang: Language,
) -> Result<String, TranslatorError> {
    let workdir = tempfile::tempdir()?;
    let src_file = workdir.path().join("input.txt");
    let out_file = workdir.path().join("output.txt");
    fs::write(&src_file, source)?;
    let argv: Vec<String> = backend
        .argv
        .iter()
        .map(|arg| {
            arg.replace("{src_file}", &src_file.display().to_string())
                .replace("{out_file}", &out_file.display().to_string())
                .replace("{src_lang}", src_lang.id())
                .replace("{tgt_lang}", tgt_lang.id())
        })
        .collect();
    let (bin, args) = argv
        .split_first()
        .ok_or_else(|| TranslatorError::BadConfig("empty command argv".into()))?;
    let output = Command::new(bin)
        .args(args)
        .output()
        .map_err(|e| TranslatorError::CommandFailed(format!("{bin}: {e}")))?;
    if !output.status.success() {
        return Err(TranslatorError::CommandFailed(format!(
            "{bin} exited {:?}: {}",
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        )));
    }
    if out_file.is_file() {
        Ok(fs::read_to_string(&out_file)?)
    } else {
        Ok(String::from_utf8_lossy(&output.stdout).into_owned())
    }
}

fn run_http_backend(
    backend: &HttpBackend,
    model_id: &str,
    source: &str,
    src_lang: Language,
    tgt_lang: Language,
) -> Result<String, TranslatorError> {
    let prompt = backend
        .prompt_template
        .replace("{src_lang}", src_lang.id())
        .replace("{tgt_lang}", tgt_lang.id())
        .replace("{code}", source);
    let body = serde_json::json!({ "model": model_id, "prompt": prompt });

    let mut last_error = TranslatorError::Transport("no attempts made".into());
    for attempt in 0..=backend.max_retries {
        if attempt > 0 {
            // exponential backoff: 1s, 2s, 4s, ...
            std::thread::sleep(Duration::from_secs(1u64 << (attempt - 1).min(6)));
        }
        let mut request = ureq::post(&backend.endpoint)
            .timeout(Duration::from_secs(backend.timeout_s))
            .set("Content-Type", "application/json");
        if let Some(env_name) = &backend.auth_env {
            match std::env::var(env_name) {
                Ok(token) => {
                    request = request.set("Authorization", &format!("Bearer {token}"));
                }
                Err(_) => {
                    return Err(TranslatorError::BadConfig(format!(
                        "auth env var {env_name} not set"
                    )))
                }
            }
        }
        match request.send_string(&body.to_string()) {
            Ok(response) => {
                let text = response
                    .into_string()
                    .map_err(|e| TranslatorError::Transport(e.to_string()))?;
                let json: serde_json::Value = serde_json::from_str(&text)
                    .map_err(|e| TranslatorError::Transport(format!("bad reply JSON: {e}")))?;
                let mut field = &json;
                for part in backend.response_field.split('.') {
                    field = field.get(part).unwrap_or(&serde_json::Value::Null);
                }
                return field
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| {
                        TranslatorError::Transport(format!(
                            "reply field `{}` missing or not a string",
                            backend.response_field
                        ))
                    });
            }
            Err(ureq::Error::Status(code, _)) => {
                last_error = TranslatorError::HttpError(code);
                if code < 500 && code != 429 {
                    break; // client errors don't retry
                }
            }
            Err(e) => {
                last_error = TranslatorError::Transport(e.to_string());
            }
        }
    }
    Err(last_error)
}

/// One record per (case, pair, attempt). Backend failures become records
/// with an empty translated source (judged CompileError downstream) and
/// never abort the batch.
pub fn batch_translate(
    corpus: &Corpus,
    pairs: &[(Language, Language)],
    client: &TranslatorClient,
    attempts: u32,
    parallelism: usize,
) -> Vec<TranslationRecord> {
    let mut jobs: Vec<TranslationRecord> = Vec::new();
    for case in corpus.iter() {
        for &(src, tgt) in pairs {
            if case.language != src {
                continue;
            }
            for attempt in 0..attempts.max(1) {
                jobs.push(TranslationRecord {
                    case_id: case.id.clone(),
                    source_language: src,
                    target_language: tgt,
                    model_id: client.config.model_id.clone(),
                    attempt,
                    translated_source: String::new(),
                });
            }
        }
    }

    let next = AtomicUsize::new(0);
    let slots: Mutex<BTreeMap<usize, String>> = Mutex::new(BTreeMap::new());
    let workers = parallelism.max(1).min(jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let job = &jobs[i];
                let case = corpus.get(&job.case_id).expect("job built from corpus");
                let translated = client
                    .translate(&case.source, job.source_language, job.target_language)
                    .unwrap_or_default();
                slots.lock().expect("slot lock").insert(i, translated);
            });
        }
    });

    let translated = slots.into_inner().expect("slot lock");
    jobs.into_iter()
        .enumerate()
        .map(|(i, mut job)| {
            if let Some(text) = translated.get(&i) {
                job.translated_source = text.clone();
            }
            job
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_key_sensitive_to_every_component() {
        let base = Cache::key("m", Language::Cpp, Language::Python, "int foo();");
        assert_ne!(base, Cache::key("m2", Language::Cpp, Language::Python, "int foo();"));
        assert_ne!(base, Cache::key("m", Language::Java, Language::Python, "int foo();"));
        assert_ne!(base, Cache::key("m", Language::Cpp, Language::Java, "int foo();"));
        assert_ne!(base, Cache::key("m", Language::Cpp, Language::Python, "int bar();"));
        assert_eq!(base, Cache::key("m", Language::Cpp, Language::Python, "int foo();"));
    }

    #[test]
    fn fence_stripping_keeps_body_only() {
        let fenced = "```python\ndef foo(a,b):\n    return a//b\n```";
        assert_eq!(strip_code_fences(fenced), "def foo(a,b):\n    return a//b");
        let plain = "def foo(a, b):\n    return a // b\n";
        assert_eq!(strip_code_fences(plain), plain);
        let no_tag = "```\nint x;\n```";
        assert_eq!(strip_code_fences(no_tag), "int x;");
    }

    #[test]
    fn limiter_spaces_grants_by_interval() {
        // 60 requests/minute => 1s spacing, measured at the limiter itself.
        let limiter = RateLimiter::new(60);
        let t0 = Instant::now();
        assert_eq!(limiter.reserve(t0), Duration::ZERO);
        let wait1 = limiter.reserve(t0);
        assert!(wait1 >= Duration::from_secs(1), "{wait1:?}");
        let wait2 = limiter.reserve(t0);
        assert!(wait2 >= Duration::from_secs(2), "{wait2:?}");
        // a caller arriving after the reserved horizon waits nothing
        let late = t0 + Duration::from_secs(10);
        assert_eq!(limiter.reserve(late), Duration::ZERO);
    }
}
