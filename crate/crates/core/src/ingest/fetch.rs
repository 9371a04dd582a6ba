//! Client for a paginated article-search endpoint.
//!
//! Requests go through a [`Transport`] so the retry and pagination logic can
//! be exercised without a network. Responses are optionally cached on disk,
//! keyed by keyword, date range and page.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use log::{info, warn};
use serde::Deserialize;

use super::NewsDocument;
use crate::error::{Error, Result};

/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "NYT_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "https://api.nytimes.com/svc/search/v2/articlesearch.json";

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

pub trait Transport {
    fn get(&self, url: &str, query: &[(String, String)]) -> Result<HttpResponse>;
}

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub endpoint: String,
    pub api_key: String,
    /// Total attempts per page when the endpoint answers HTTP 429.
    pub max_attempts: u32,
    /// First retry delay; doubles on each further retry.
    pub backoff: Duration,
    /// Minimum spacing between consecutive requests to the endpoint.
    pub min_interval: Duration,
    pub max_pages: u32,
    pub page_size: usize,
    pub cache_dir: Option<PathBuf>,
}

impl FetchConfig {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            max_attempts: 5,
            backoff: Duration::from_secs(2),
            min_interval: Duration::from_secs(6),
            max_pages: 100,
            page_size: 10,
            cache_dir: None,
        }
    }

    pub fn from_env(endpoint: impl Into<String>) -> Result<Self> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| Error::InvalidInput(format!("{API_KEY_ENV} is not set")))?;
        Ok(Self::new(endpoint, key))
    }
}

#[derive(Debug, Default)]
pub struct FetchOutcome {
    pub documents: Vec<NewsDocument>,
    pub pages: u32,
    pub retries: u32,
    pub cache_hits: u32,
}

pub struct ArticleClient<T> {
    transport: T,
    config: FetchConfig,
    last_request: Mutex<Option<Instant>>,
}

impl<T: Transport> ArticleClient<T> {
    pub fn new(transport: T, config: FetchConfig) -> Self {
        Self {
            transport,
            config,
            last_request: Mutex::new(None),
        }
    }

    pub fn fetch_articles(
        &self,
        keyword: &str,
        begin: NaiveDate,
        end: NaiveDate,
    ) -> Result<FetchOutcome> {
        if begin > end {
            return Err(Error::InvalidInput(format!(
                "begin {begin} after end {end}"
            )));
        }
        let mut outcome = FetchOutcome::default();
        for page in 0..self.config.max_pages {
            let body = match self.cached(keyword, begin, end, page) {
                Some(body) => {
                    outcome.cache_hits += 1;
                    body
                }
                None => {
                    let body =
                        self.request_page(keyword, begin, end, page, &mut outcome.retries)?;
                    self.store(keyword, begin, end, page, &body)?;
                    body
                }
            };
            outcome.pages += 1;
            let docs = parse_page(&body, keyword)?;
            let raw_count = docs.raw_count;
            outcome.documents.extend(docs.documents);
            if raw_count < self.config.page_size {
                break;
            }
        }
        info!(
            "{keyword}: {} documents from {} pages ({} retries)",
            outcome.documents.len(),
            outcome.pages,
            outcome.retries
        );
        Ok(outcome)
    }

    fn request_page(
        &self,
        keyword: &str,
        begin: NaiveDate,
        end: NaiveDate,
        page: u32,
        retries: &mut u32,
    ) -> Result<String> {
        let query = vec![
            ("q".to_string(), keyword.to_string()),
            ("begin_date".to_string(), begin.format("%Y%m%d").to_string()),
            ("end_date".to_string(), end.format("%Y%m%d").to_string()),
            ("page".to_string(), page.to_string()),
            ("api-key".to_string(), self.config.api_key.clone()),
        ];
        let mut delay = self.config.backoff;
        for attempt in 1..=self.config.max_attempts.max(1) {
            let resp = {
                // Holding the lock serializes requests against this endpoint.
                let mut last = self.last_request.lock().expect("rate limiter poisoned");
                if let Some(prev) = *last {
                    let elapsed = prev.elapsed();
                    if elapsed < self.config.min_interval {
                        thread::sleep(self.config.min_interval - elapsed);
                    }
                }
                let resp = self.transport.get(&self.config.endpoint, &query);
                *last = Some(Instant::now());
                resp?
            };
            match resp.status {
                200..=299 => return Ok(resp.body),
                401 | 403 => return Err(Error::Auth(resp.status)),
                429 if attempt < self.config.max_attempts => {
                    *retries += 1;
                    warn!(
                        "{keyword} page {page}: rate limited (attempt {attempt}), retrying in {delay:?}"
                    );
                    thread::sleep(delay);
                    delay *= 2;
                }
                429 => {
                    return Err(Error::RateLimited {
                        attempts: self.config.max_attempts,
                    })
                }
                s => {
                    return Err(Error::Network(format!(
                        "HTTP {s} for {keyword} page {page}"
                    )))
                }
            }
        }
        Err(Error::RateLimited {
            attempts: self.config.max_attempts,
        })
    }

    fn cache_path(
        &self,
        keyword: &str,
        begin: NaiveDate,
        end: NaiveDate,
        page: u32,
    ) -> Option<PathBuf> {
        let dir = self.config.cache_dir.as_ref()?;
        let slug: String = keyword
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect();
        let name = format!(
            "{slug}-{:016x}_{}_{}_p{page}.json",
            fnv1a(keyword.as_bytes()),
            begin.format("%Y%m%d"),
            end.format("%Y%m%d")
        );
        Some(dir.join(name))
    }

    fn cached(&self, keyword: &str, begin: NaiveDate, end: NaiveDate, page: u32) -> Option<String> {
        let path = self.cache_path(keyword, begin, end, page)?;
        fs::read_to_string(path).ok()
    }

    fn store(
        &self,
        keyword: &str,
        begin: NaiveDate,
        end: NaiveDate,
        page: u32,
        body: &str,
    ) -> Result<()> {
        if let Some(path) = self.cache_path(keyword, begin, end, page) {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, body)?;
        }
        Ok(())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

#[derive(Deserialize)]
struct SearchPage {
    response: Option<SearchResponse>,
}

#[derive(Deserialize)]
struct SearchResponse {
    #[serde(default)]
    docs: Option<Vec<SearchDoc>>,
}

#[derive(Deserialize)]
struct SearchDoc {
    pub_date: Option<String>,
    #[serde(rename = "abstract")]
    abstract_: Option<String>,
    lead_paragraph: Option<String>,
    snippet: Option<String>,
    headline: Option<Headline>,
}

#[derive(Deserialize)]
struct Headline {
    main: Option<String>,
}

struct ParsedPage {
    documents: Vec<NewsDocument>,
    raw_count: usize,
}

fn parse_page(body: &str, keyword: &str) -> Result<ParsedPage> {
    let page: SearchPage = serde_json::from_str(body)?;
    let docs = page.response.and_then(|r| r.docs).unwrap_or_default();
    let raw_count = docs.len();
    let mut documents = Vec::with_capacity(raw_count);
    for doc in docs {
        let Some(date) = doc.pub_date.as_deref().and_then(parse_pub_date) else {
            warn!("{keyword}: article without usable pub_date skipped");
            continue;
        };
        let mut parts: Vec<String> = Vec::new();
        let headline = doc.headline.and_then(|h| h.main);
        for part in [headline, doc.abstract_, doc.lead_paragraph, doc.snippet]
            .into_iter()
            .flatten()
        {
            let part = part.trim().to_string();
            if !part.is_empty() && !parts.contains(&part) {
                parts.push(part);
            }
        }
        if parts.is_empty() {
            continue;
        }
        documents.push(NewsDocument {
            keyword: keyword.to_string(),
            date,
            body: parts.join("\n"),
        });
    }
    Ok(ParsedPage {
        documents,
        raw_count,
    })
}

fn parse_pub_date(s: &str) -> Option<NaiveDate> {
    if let Ok(dt) = chrono::DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%z") {
        return Some(dt.with_timezone(&chrono::Utc).date_naive());
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&chrono::Utc).date_naive());
    }
    s.get(..10)
        .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
}

/// Blocking HTTP transport.
#[cfg(feature = "fetch")]
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

#[cfg(feature = "fetch")]
impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Network(e.to_string()))?;
        Ok(Self { client })
    }
}

#[cfg(feature = "fetch")]
impl Transport for HttpTransport {
    fn get(&self, url: &str, query: &[(String, String)]) -> Result<HttpResponse> {
        let resp = self
            .client
            .get(url)
            .query(query)
            .send()
            .map_err(|e| Error::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| Error::Network(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}
