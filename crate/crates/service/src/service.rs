//! The feed pipeline: compile, fetch, map, serialize, with the file cache in
//! front.

use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use feedforge_core::bindings::BindingSet;
use feedforge_core::cache::{FeedCache, Fingerprint, Lookup, SingleFlight};
use feedforge_core::clock::{Clock, ManualClock, SystemClock};
use feedforge_core::currency::{RateTable, SharedRates, RATE_QUERY};
use feedforge_core::feed::{rfc3339, serialize};
use feedforge_core::mapper::map_bindings;
use feedforge_core::model::{AbsoluteUri, FeedDocument, FeedFormat, SearchMode, SearchRequest, Violation, ViolationCode};
use feedforge_core::params::to_query_string;
use feedforge_core::query::{build, SparqlQuery};
use feedforge_core::{CacheError, QueryError};
use serde::Serialize;
use thiserror::Error;

use crate::client::{ClientError, SparqlClient};
use crate::config::{RateSourceConfig, ServiceConfig};

/// Upper bound on the health-check ping.
const PING_TIMEOUT: std::time::Duration = std::time::Duration::from_secs(2);

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid request")]
    Invalid(Vec<Violation>),
    #[error("exchange rates unavailable: {0}")]
    RatesUnavailable(String),
    #[error(transparent)]
    Endpoint(#[from] ClientError),
    #[error("cannot open feed cache: {0}")]
    Cache(#[from] CacheError),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
    Stale,
}

impl CacheStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CacheStatus::Hit => "HIT",
            CacheStatus::Miss => "MISS",
            CacheStatus::Stale => "STALE",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeedResponse {
    pub body: Vec<u8>,
    pub format: FeedFormat,
    pub cache: CacheStatus,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RateHealth {
    pub base: String,
    pub as_of: String,
    pub stale: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EndpointHealth {
    pub url: String,
    pub reachable: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Health {
    pub status: &'static str,
    pub rates: Option<RateHealth>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_error: Option<String>,
    pub endpoint: EndpointHealth,
    pub cache_records: usize,
}

fn violation(field: &str, code: ViolationCode, message: impl Into<String>) -> ServiceError {
    ServiceError::Invalid(vec![Violation::new(field, code, message)])
}

impl From<QueryError> for ServiceError {
    fn from(e: QueryError) -> Self {
        let msg = e.to_string();
        match e {
            QueryError::InvalidRequest(v) => ServiceError::Invalid(v),
            QueryError::MissingRates(_) => ServiceError::RatesUnavailable(msg),
            QueryError::UnknownTargetCurrency(_) => violation("currency", ViolationCode::InvalidValue, msg),
            QueryError::DisallowedVariable(_) => violation("query", ViolationCode::DisallowedVariable, msg),
            QueryError::NotSelect(_) | QueryError::MissingVariable(_) | QueryError::Unparseable(_) => {
                violation("query", ViolationCode::InvalidQuery, msg)
            }
            QueryError::EmptyKeyword => violation("q", ViolationCode::EmptyKeyword, msg),
            QueryError::UnsafeKeyword(_) | QueryError::KeywordTooLong(_) => {
                violation("q", ViolationCode::UnsafeKeyword, msg)
            }
            QueryError::WrongMode { .. } => ServiceError::Internal(msg),
        }
    }
}

/// Feed title for a request.
pub fn feed_title(req: &SearchRequest) -> String {
    match req.mode {
        SearchMode::Expert => "Offers: custom query".to_string(),
        _ => format!("Offers: {}", req.keyword.trim()),
    }
}

#[derive(Debug)]
pub struct FeedService {
    config: ServiceConfig,
    client: SparqlClient,
    cache: Option<FeedCache>,
    flights: SingleFlight,
    rates: SharedRates,
    rate_error: Mutex<Option<String>>,
    clock: Arc<dyn Clock>,
}

impl FeedService {
    /// Opens the cache and picks the clock from the configuration.
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        let clock = Self::clock_for(&config);
        Self::with_clock(config, clock)
    }

    pub fn with_clock(config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        let grace = chrono::Duration::from_std(config.cache_grace)
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        let cache = FeedCache::open(&config.cache_dir, clock.clone())?.with_grace(grace);
        Ok(Self::assemble(config, clock, Some(cache)))
    }

    /// A service that never touches the cache directory.
    pub fn uncached(config: ServiceConfig, clock: Arc<dyn Clock>) -> Self {
        Self::assemble(config, clock, None)
    }

    fn assemble(config: ServiceConfig, clock: Arc<dyn Clock>, cache: Option<FeedCache>) -> Self {
        FeedService {
            client: SparqlClient::new(config.request_timeout),
            config,
            cache,
            flights: SingleFlight::new(),
            rates: SharedRates::default(),
            rate_error: Mutex::new(None),
            clock,
        }
    }

    /// Picks the clock from the configuration.
    pub fn clock_for(config: &ServiceConfig) -> Arc<dyn Clock> {
        match config.fixed_time {
            Some(t) => Arc::new(ManualClock::new(t)),
            None => Arc::new(SystemClock),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn cache(&self) -> Option<&FeedCache> {
        self.cache.as_ref()
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn rates(&self) -> Option<Arc<RateTable>> {
        self.rates.current()
    }

    /// Installs a rate table directly.
    pub fn set_rates(&self, table: RateTable) {
        self.rates.replace(table);
        *self.rate_error.lock().expect("rate error lock poisoned") = None;
    }

    async fn fetch_rates(&self) -> Result<RateTable, String> {
        let bindings = |url: &str| {
            let url = url.to_string();
            async move {
                self.client
                    .execute(&url, RATE_QUERY)
                    .await
                    .map_err(|e| e.to_string())
                    .and_then(|b: BindingSet| RateTable::from_bindings(&b).map_err(|e| e.to_string()))
            }
        };
        match &self.config.rate_source {
            RateSourceConfig::Endpoint => bindings(self.config.endpoint_url.as_str()).await,
            RateSourceConfig::Sparql(url) => bindings(url.as_str()).await,
            RateSourceConfig::File(path) => {
                let text = tokio::fs::read_to_string(path)
                    .await
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                RateTable::parse_file(&text).map_err(|e| format!("{}: {e}", path.display()))
            }
        }
    }

    /// Reloads the rate table. On failure the previous table stays in use.
    ///
    /// A table past `rate_max_age` is still installed, because the endpoint
    /// converts with its own rate graph; the local table only decides which
    /// target currencies are accepted. Staleness shows up in [`Self::health`].
    pub async fn refresh_rates(&self) -> Result<Arc<RateTable>, String> {
        let result = self.fetch_rates().await;
        let mut err = self.rate_error.lock().expect("rate error lock poisoned");
        match result {
            Ok(table) => {
                if table.is_stale(self.now(), self.max_age()) {
                    tracing::warn!(as_of = %table.as_of(), "exchange rates are stale");
                }
                *err = None;
                drop(err);
                self.rates.replace(table);
                Ok(self.rates.current().expect("just installed"))
            }
            Err(e) => {
                tracing::warn!(error = %e, "cannot load exchange rates");
                *err = Some(e.clone());
                Err(e)
            }
        }
    }

    fn max_age(&self) -> chrono::Duration {
        chrono::Duration::from_std(self.config.rate_max_age).unwrap_or(chrono::Duration::MAX)
    }

    /// Feed self link for `req` served under `base` (scheme and authority).
    pub fn self_url(&self, base: &str, req: &SearchRequest) -> String {
        format!("{}/feed?{}", base.trim_end_matches('/'), to_query_string(req))
    }

    pub fn compile(&self, req: &SearchRequest) -> Result<SparqlQuery, ServiceError> {
        let rates = self.rates.current();
        Ok(build(req, self.config.dialect, rates.as_deref(), self.config.max_limit)?)
    }

    fn render(&self, req: &SearchRequest, bindings: &BindingSet, self_url: &str) -> Result<Vec<u8>, ServiceError> {
        let now = self.now();
        let mapped = map_bindings(bindings, req, now);
        for d in &mapped.defects {
            tracing::debug!(defect = ?d, "result row defect");
        }
        if mapped.defect_count() > 0 {
            tracing::info!(
                defects = mapped.defect_count(),
                dropped = mapped.dropped_rows(),
                "endpoint rows with defects"
            );
        }
        let self_url = AbsoluteUri::parse(self_url).map_err(|e| ServiceError::Internal(e.to_string()))?;
        let description = format!("GoodRelations offers from {}", self.config.endpoint_url);
        let doc = FeedDocument::new(feed_title(req), self_url, description, now, mapped.entries)
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        Ok(serialize(&doc, req.format).into_bytes())
    }

    async fn run(&self, req: &SearchRequest, query: &SparqlQuery, self_url: &str) -> Result<Vec<u8>, ServiceError> {
        let bindings = self.client.execute(self.config.endpoint_url.as_str(), &query.text).await?;
        self.render(req, &bindings, self_url)
    }

    /// Generates a feed without consulting or filling the cache.
    pub async fn generate(&self, req: &SearchRequest, self_url: &str) -> Result<Vec<u8>, ServiceError> {
        let query = self.compile(req)?;
        self.run(req, &query, self_url).await
    }

    fn fingerprint(&self, req: &SearchRequest, query: &SparqlQuery, self_url: &str) -> Fingerprint {
        Fingerprint {
            endpoint_url: self.config.endpoint_url.to_string(),
            query_text: query.text.clone(),
            format: req.format,
            self_url: self_url.to_string(),
        }
    }

    async fn regenerate(
        &self,
        fp: &Fingerprint,
        req: &SearchRequest,
        query: &SparqlQuery,
        self_url: &str,
    ) -> Result<Vec<u8>, ServiceError> {
        let body = self.run(req, query, self_url).await?;
        let ttl = chrono::Duration::from_std(self.config.cache_ttl).unwrap_or(chrono::Duration::MAX);
        let stored = self.cache.as_ref().map(|c| c.store(fp, &body, ttl));
        if let Some(Err(e)) = stored {
            tracing::error!(error = %e, "cannot store feed; serving uncached");
        }
        Ok(body)
    }

    /// Regenerates, falling back to `stale` bytes when the endpoint fails.
    async fn regenerate_or(
        &self,
        stale: Option<Vec<u8>>,
        fp: &Fingerprint,
        req: &SearchRequest,
        query: &SparqlQuery,
        self_url: &str,
    ) -> Result<FeedResponse, ServiceError> {
        let format = req.format;
        match (self.regenerate(fp, req, query, self_url).await, stale) {
            (Ok(body), _) => Ok(FeedResponse { body, format, cache: CacheStatus::Miss }),
            (Err(ServiceError::Endpoint(e)), Some(body)) => {
                tracing::warn!(error = %e, "endpoint failed; serving stale feed");
                Ok(FeedResponse { body, format, cache: CacheStatus::Stale })
            }
            (Err(e), _) => Err(e),
        }
    }

    /// Serves a feed through the cache.
    ///
    /// An expired entry is regenerated by exactly one caller; everyone else
    /// gets the stale bytes meanwhile. Failures are never cached.
    pub async fn feed(&self, req: &SearchRequest, self_url: &str) -> Result<FeedResponse, ServiceError> {
        let query = self.compile(req)?;
        let format = req.format;
        let Some(cache) = &self.cache else {
            let body = self.run(req, &query, self_url).await?;
            return Ok(FeedResponse { body, format, cache: CacheStatus::Miss });
        };
        let fp = self.fingerprint(req, &query, self_url);
        let key = fp.key();
        let hit = |body| FeedResponse { body, format, cache: CacheStatus::Hit };

        match cache.lookup(&fp) {
            Lookup::Fresh(body) => Ok(hit(body)),
            Lookup::Stale(old) => {
                let Some(_flight) = self.flights.try_acquire(&key) else {
                    return Ok(FeedResponse { body: old, format, cache: CacheStatus::Stale });
                };
                // another caller may have finished between lookup and acquire
                match cache.lookup(&fp) {
                    Lookup::Fresh(body) => Ok(hit(body)),
                    Lookup::Stale(old) => self.regenerate_or(Some(old), &fp, req, &query, self_url).await,
                    Lookup::Miss => self.regenerate_or(Some(old), &fp, req, &query, self_url).await,
                }
            }
            Lookup::Miss => {
                let _flight = self.flights.acquire(&key).await;
                match cache.lookup(&fp) {
                    Lookup::Fresh(body) => Ok(hit(body)),
                    Lookup::Stale(old) => self.regenerate_or(Some(old), &fp, req, &query, self_url).await,
                    Lookup::Miss => self.regenerate_or(None, &fp, req, &query, self_url).await,
                }
            }
        }
    }

    /// Drops cache records past TTL plus grace.
    pub fn purge(&self) -> usize {
        self.cache.as_ref().map_or(0, |c| c.purge_expired(self.now()))
    }

    pub async fn health(&self) -> Health {
        let now = self.now();
        let rates = self.rates.current().map(|t| RateHealth {
            base: t.base().to_string(),
            as_of: rfc3339(t.as_of()),
            stale: t.is_stale(now, self.max_age()),
        });
        let rate_error = self.rate_error.lock().expect("rate error lock poisoned").clone();
        let url = self.config.endpoint_url.to_string();
        let reachable = self.client.ping(&url, PING_TIMEOUT.min(self.client.timeout())).await;
        let healthy = reachable && rates.as_ref().is_some_and(|r| !r.stale);
        Health {
            status: if healthy { "ok" } else { "degraded" },
            rates,
            rate_error,
            endpoint: EndpointHealth { url, reachable },
            cache_records: self.cache.as_ref().map_or(0, FeedCache::len),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_errors_map_to_field_violations() {
        let e: ServiceError = QueryError::DisallowedVariable("foo".into()).into();
        let ServiceError::Invalid(v) = e else { panic!() };
        assert_eq!(v[0].field, "query");
        assert_eq!(v[0].code, ViolationCode::DisallowedVariable);
        assert!(v[0].message.contains("?foo"));

        let e: ServiceError = QueryError::MissingRates("USD".parse().unwrap()).into();
        assert!(matches!(e, ServiceError::RatesUnavailable(_)));
    }

    #[test]
    fn titles() {
        assert_eq!(feed_title(&SearchRequest::basic(" camcorder ")), "Offers: camcorder");
        assert_eq!(feed_title(&SearchRequest::expert("SELECT")), "Offers: custom query");
    }
}
