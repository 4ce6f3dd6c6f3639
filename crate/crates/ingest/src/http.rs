//! HTTP plumbing shared by the exchange clients: a pluggable transport, a
//! token-bucket rate limiter and bounded exponential-backoff retries.

use crate::error::{IngestError, Result};
use serde::Deserialize;
use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Environment variable naming an HTTP(S) proxy for all exchange requests.
/// The usual `HTTPS_PROXY`/`HTTP_PROXY` variables are honoured as well.
pub const PROXY_ENV: &str = "CRASHNET_PROXY";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Something that can perform a GET. Transport failures (no connection,
/// timeouts) are reported as `IngestError::Network`; any HTTP status is a
/// successful transport result.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Result<Self> {
        let mut builder = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .user_agent(concat!("crashnet/", env!("CARGO_PKG_VERSION")));
        if let Ok(proxy) = std::env::var(PROXY_ENV) {
            let proxy = reqwest::Proxy::all(&proxy).map_err(|e| IngestError::Network {
                url: proxy.clone(),
                message: format!("bad proxy: {e}"),
            })?;
            builder = builder.proxy(proxy);
        }
        let client = builder
            .build()
            .map_err(|e| IngestError::Network { url: String::new(), message: e.to_string() })?;
        Ok(Self { client })
    }
}

impl Transport for ReqwestTransport {
    fn get(&self, url: &str) -> Result<HttpResponse> {
        let network = |e: reqwest::Error| IngestError::Network { url: url.to_string(), message: e.to_string() };
        let resp = self.client.get(url).send().map_err(network)?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(network)?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Debug, Clone, Deserialize)]
struct FixtureEntry {
    request: String,
    #[serde(default = "ok_status")]
    status: u16,
    body: serde_json::Value,
}

fn ok_status() -> u16 {
    200
}

#[derive(Debug, Deserialize)]
struct FixtureFile {
    responses: Vec<FixtureEntry>,
}

/// Replays recorded responses keyed by request path and query string. When
/// the same request appears several times the responses are served in
/// order and the last one repeats. Unknown requests are network errors.
pub struct FixtureTransport {
    entries: HashMap<String, Vec<HttpResponse>>,
    served: Mutex<HashMap<String, usize>>,
    log: Mutex<Vec<String>>,
}

fn request_key(url: &str) -> &str {
    match url.find("://") {
        Some(i) => {
            let rest = &url[i + 3..];
            rest.find('/').map_or("/", |j| &rest[j..])
        }
        None => url,
    }
}

impl FixtureTransport {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: FixtureFile = serde_json::from_str(text)
            .map_err(|e| IngestError::Parse { url: "fixture".into(), message: e.to_string() })?;
        let mut entries: HashMap<String, Vec<HttpResponse>> = HashMap::new();
        for e in file.responses {
            let body = match e.body {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            entries.entry(e.request).or_default().push(HttpResponse { status: e.status, body });
        }
        Ok(Self { entries, served: Mutex::new(HashMap::new()), log: Mutex::new(Vec::new()) })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Requests seen so far, as path plus query.
    pub fn requests(&self) -> Vec<String> {
        self.log.lock().unwrap().clone()
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str) -> Result<HttpResponse> {
        let key = request_key(url);
        self.log.lock().unwrap().push(key.to_string());
        let Some(list) = self.entries.get(key) else {
            return Err(IngestError::Network { url: url.to_string(), message: "no recorded response".into() });
        };
        let mut served = self.served.lock().unwrap();
        let n = served.entry(key.to_string()).or_insert(0);
        let resp = list[(*n).min(list.len() - 1)].clone();
        *n += 1;
        Ok(resp)
    }
}

/// Token bucket holding at most `burst` tokens, refilled at `rate` per
/// second. `acquire` blocks until a token is available.
pub struct RateLimiter {
    rate: f64,
    burst: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(rate_per_sec: f64, burst: u32) -> Self {
        let burst = f64::from(burst.max(1));
        Self { rate: rate_per_sec, burst, state: Mutex::new((burst, Instant::now())) }
    }

    pub fn unlimited() -> Self {
        Self::new(f64::INFINITY, 1)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn acquire(&self) {
        if self.rate.is_infinite() {
            return;
        }
        let mut state = self.state.lock().unwrap();
        let now = Instant::now();
        let (tokens, last) = *state;
        let mut tokens = (tokens + now.duration_since(last).as_secs_f64() * self.rate).min(self.burst);
        let mut now = now;
        if tokens < 1.0 {
            let wait = Duration::from_secs_f64((1.0 - tokens) / self.rate);
            std::thread::sleep(wait);
            now += wait;
            tokens = 1.0;
        }
        *state = (tokens - 1.0, now);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 5, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(30) }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        Self { max_attempts, base_delay: Duration::ZERO, max_delay: Duration::ZERO }
    }

    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << attempt.min(16)).min(self.max_delay)
    }
}

/// Rate-limited, retrying GET client for one exchange.
pub struct HttpClient {
    transport: Box<dyn Transport>,
    limiter: RateLimiter,
    retry: RetryPolicy,
}

impl HttpClient {
    pub fn new(transport: Box<dyn Transport>, limiter: RateLimiter, retry: RetryPolicy) -> Self {
        Self { transport, limiter, retry }
    }

    /// Performs a GET, retrying network failures, 5xx and rate-limit
    /// statuses (429, 418). `classify` may turn a received response into a
    /// retryable `Network` error (exchanges that signal throttling in the
    /// body) or any other error.
    pub fn get_with<F>(&self, url: &str, classify: F) -> Result<HttpResponse>
    where
        F: Fn(&HttpResponse) -> Result<()>,
    {
        let mut attempt = 0;
        loop {
            self.limiter.acquire();
            let outcome = self.transport.get(url).and_then(|resp| {
                if resp.status >= 500 || resp.status == 429 || resp.status == 418 {
                    return Err(IngestError::Network {
                        url: url.to_string(),
                        message: format!("HTTP {}", resp.status),
                    });
                }
                classify(&resp)?;
                Ok(resp)
            });
            match outcome {
                Err(e) if e.is_retryable() && attempt + 1 < self.retry.max_attempts => {
                    let wait = self.retry.delay(attempt);
                    log::warn!("{e}; retrying in {wait:?}");
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_keys() {
        assert_eq!(request_key("https://api.kraken.com/0/public/Trades?pair=X"), "/0/public/Trades?pair=X");
        assert_eq!(request_key("/a?b=1"), "/a?b=1");
    }

    #[test]
    fn fixture_sequence_and_unknown() {
        let t = FixtureTransport::from_json(
            r#"{"responses":[{"request":"/x","status":500,"body":"oops"},{"request":"/x","body":{"ok":true}}]}"#,
        )
        .unwrap();
        assert_eq!(t.get("http://h/x").unwrap().status, 500);
        assert_eq!(t.get("http://h/x").unwrap().body, r#"{"ok":true}"#);
        assert_eq!(t.get("http://h/x").unwrap().status, 200);
        assert!(matches!(t.get("http://h/y"), Err(IngestError::Network { .. })));
    }

    #[test]
    fn retries_server_errors() {
        let t = FixtureTransport::from_json(
            r#"{"responses":[{"request":"/x","status":503,"body":""},{"request":"/x","status":429,"body":""},{"request":"/x","body":"fine"}]}"#,
        )
        .unwrap();
        let c = HttpClient::new(Box::new(t), RateLimiter::unlimited(), RetryPolicy::no_delay(5));
        assert_eq!(c.get_with("http://h/x", |_| Ok(())).unwrap().body, "fine");
    }

    #[test]
    fn retry_budget_is_bounded() {
        let t = FixtureTransport::from_json(r#"{"responses":[{"request":"/x","status":502,"body":""}]}"#).unwrap();
        let c = HttpClient::new(Box::new(t), RateLimiter::unlimited(), RetryPolicy::no_delay(3));
        assert!(matches!(c.get_with("http://h/x", |_| Ok(())), Err(IngestError::Network { .. })));
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy { max_attempts: 5, base_delay: Duration::from_millis(100), max_delay: Duration::from_millis(500) };
        assert_eq!(p.delay(0), Duration::from_millis(100));
        assert_eq!(p.delay(2), Duration::from_millis(400));
        assert_eq!(p.delay(3), Duration::from_millis(500));
    }

    #[test]
    fn limiter_spaces_requests() {
        let l = RateLimiter::new(50.0, 1);
        let start = Instant::now();
        for _ in 0..6 {
            l.acquire();
        }
        // first token is free, five more need ~100 ms at 50/s
        assert!(start.elapsed() >= Duration::from_millis(90));
    }
}
