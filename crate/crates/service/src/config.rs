//! Service configuration: a flat `key=value` file overridden by
//! `FEEDFORGE_<KEY>` environment variables.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use feedforge_core::model::MAX_LIMIT;
use feedforge_core::query::SparqlDialect;
use thiserror::Error;
use url::Url;

pub const ENV_PREFIX: &str = "FEEDFORGE_";

pub const KEYS: [&str; 12] = [
    "listen_address",
    "endpoint_url",
    "dialect",
    "cache_dir",
    "cache_ttl",
    "cache_grace",
    "rate_source",
    "rate_max_age",
    "max_limit",
    "request_timeout",
    "public_url",
    "fixed_time",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

/// Where the client-side rate table comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RateSourceConfig {
    /// Query the rate graph on the configured endpoint.
    Endpoint,
    /// Query the rate graph on another SPARQL endpoint.
    Sparql(Url),
    /// Read a rate file.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen_address: SocketAddr,
    pub endpoint_url: Url,
    pub dialect: SparqlDialect,
    pub cache_dir: PathBuf,
    pub cache_ttl: Duration,
    /// How long expired feeds are kept for stale serving before purging.
    pub cache_grace: Duration,
    pub rate_source: RateSourceConfig,
    pub rate_max_age: Duration,
    pub max_limit: u32,
    pub request_timeout: Duration,
    /// Base URL the service is reachable under. When unset, the Host header
    /// of each request is used.
    pub public_url: Option<Url>,
    /// Freezes the clock, for reproducible output.
    pub fixed_time: Option<DateTime<Utc>>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen_address: "127.0.0.1:8080".parse().unwrap(),
            endpoint_url: Url::parse("http://localhost:8890/sparql").unwrap(),
            dialect: SparqlDialect::Standard11,
            cache_dir: PathBuf::from("feedforge-cache"),
            cache_ttl: Duration::from_secs(24 * 60 * 60),
            cache_grace: Duration::from_secs(60 * 60),
            rate_source: RateSourceConfig::Endpoint,
            rate_max_age: Duration::from_secs(7 * 24 * 60 * 60),
            max_limit: MAX_LIMIT,
            request_timeout: Duration::from_secs(10),
            public_url: None,
            fixed_time: None,
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

fn duration(key: &str, value: &str) -> Result<Duration, ConfigError> {
    humantime::parse_duration(value).map_err(|e| invalid(key, e.to_string()))
}

fn http_url(key: &str, value: &str) -> Result<Url, ConfigError> {
    let url = Url::parse(value).map_err(|e| invalid(key, e.to_string()))?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(invalid(key, "expected an http or https URL"));
    }
    Ok(url)
}

/// Splits a config document into (line, key, value) triples.
pub fn parse_lines(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push((i + 1, k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ServiceConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "listen_address" => {
                self.listen_address = value.parse().map_err(|_| invalid(key, "expected host:port"))?;
            }
            "endpoint_url" => self.endpoint_url = http_url(key, value)?,
            "dialect" => self.dialect = value.parse().map_err(|_| invalid(key, "expected standard11 or fulltext_index"))?,
            "cache_dir" => {
                if value.is_empty() {
                    return Err(invalid(key, "must not be empty"));
                }
                self.cache_dir = PathBuf::from(value);
            }
            "cache_ttl" => self.cache_ttl = duration(key, value)?,
            "cache_grace" => self.cache_grace = duration(key, value)?,
            "rate_source" => {
                self.rate_source = if value.is_empty() || value == "endpoint" {
                    RateSourceConfig::Endpoint
                } else if value.starts_with("http://") || value.starts_with("https://") {
                    RateSourceConfig::Sparql(http_url(key, value)?)
                } else if let Some(path) = value.strip_prefix("file://") {
                    RateSourceConfig::File(PathBuf::from(path))
                } else {
                    RateSourceConfig::File(PathBuf::from(value))
                }
            }
            "rate_max_age" => self.rate_max_age = duration(key, value)?,
            "max_limit" => self.max_limit = value.parse().map_err(|_| invalid(key, "expected an integer"))?,
            "request_timeout" => self.request_timeout = duration(key, value)?,
            "public_url" => {
                self.public_url = if value.is_empty() { None } else { Some(http_url(key, value)?) }
            }
            "fixed_time" => {
                self.fixed_time = if value.is_empty() {
                    None
                } else {
                    let t = DateTime::parse_from_rfc3339(value).map_err(|e| invalid(key, e.to_string()))?;
                    Some(t.with_timezone(&Utc))
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_limit == 0 || self.max_limit > MAX_LIMIT {
            return Err(invalid("max_limit", format!("must be between 1 and {MAX_LIMIT}")));
        }
        if self.cache_ttl.is_zero() {
            return Err(invalid("cache_ttl", "must be positive"));
        }
        if self.request_timeout.is_zero() {
            return Err(invalid("request_timeout", "must be positive"));
        }
        Ok(())
    }

    /// Applies a config document, then environment overrides, then validates.
    ///
    /// Environment variables with the prefix but an unknown key are errors,
    /// so typos do not pass silently.
    pub fn from_sources<I>(file: Option<&str>, env: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut cfg = ServiceConfig::default();
        if let Some(text) = file {
            for (line, k, v) in parse_lines(text)? {
                cfg.set(&k, &v).map_err(|e| match e {
                    ConfigError::Invalid { key, message } => invalid(&key, format!("line {line}: {message}")),
                    other => other,
                })?;
            }
        }
        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_ascii_lowercase(), v)))
            .collect();
        overrides.sort();
        for (k, v) in overrides {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (if any) and the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                path: p.to_path_buf(),
                message: e.to_string(),
            })?),
            None => None,
        };
        Self::from_sources(text.as_deref(), std::env::vars())
    }

    /// Base used for feed self links when no request Host is known.
    pub fn default_base(&self) -> String {
        match &self.public_url {
            Some(u) => u.as_str().trim_end_matches('/').to_string(),
            None => format!("http://{}", self.listen_address),
        }
    }
}
