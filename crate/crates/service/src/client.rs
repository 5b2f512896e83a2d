//! SPARQL protocol client.

use std::time::Duration;

use feedforge_core::bindings::{BindingSet, RESULTS_JSON_MEDIA_TYPE};
use feedforge_core::BindingsError;
use reqwest::header::{ACCEPT, CONTENT_TYPE};
use thiserror::Error;

/// Queries longer than this many bytes are POSTed instead of sent in the URL.
pub const GET_LIMIT_BYTES: usize = 2000;

/// Longest endpoint error message kept for diagnostics.
const MESSAGE_LIMIT: usize = 500;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("endpoint unreachable: {0}")]
    Network(String),
    #[error("endpoint did not answer within {0:?}")]
    Timeout(Duration),
    #[error("endpoint returned HTTP {status}: {message}")]
    Status { status: u16, message: String },
    #[error("endpoint sent an unusable results document: {0}")]
    Malformed(String),
}

impl From<BindingsError> for ClientError {
    fn from(e: BindingsError) -> Self {
        ClientError::Malformed(e.to_string())
    }
}

/// HTTP method chosen for a query of the given length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Get,
    Post,
}

pub fn transport_for(query: &str) -> Transport {
    if query.len() > GET_LIMIT_BYTES {
        Transport::Post
    } else {
        Transport::Get
    }
}

#[derive(Debug, Clone)]
pub struct SparqlClient {
    http: reqwest::Client,
    timeout: Duration,
}

impl SparqlClient {
    pub fn new(timeout: Duration) -> Self {
        let http = reqwest::Client::builder()
            .user_agent(concat!("feedforge/", env!("CARGO_PKG_VERSION")))
            .build()
            .expect("HTTP client configuration is static");
        SparqlClient { http, timeout }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    async fn send(&self, endpoint: &str, query: &str, timeout: Duration) -> Result<Vec<u8>, ClientError> {
        let req = match transport_for(query) {
            Transport::Get => self.http.get(endpoint).query(&[("query", query)]),
            Transport::Post => self.http.post(endpoint).form(&[("query", query)]),
        };
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                ClientError::Timeout(timeout)
            } else {
                ClientError::Network(e.to_string())
            }
        };
        let work = async {
            let resp = req
                .header(ACCEPT, RESULTS_JSON_MEDIA_TYPE)
                .send()
                .await
                .map_err(classify)?;
            let status = resp.status();
            if status.as_u16() >= 400 {
                let body = resp.text().await.unwrap_or_default();
                let mut message: String = body.trim().chars().take(MESSAGE_LIMIT).collect();
                if message.is_empty() {
                    message = status.canonical_reason().unwrap_or("error").to_string();
                }
                return Err(ClientError::Status {
                    status: status.as_u16(),
                    message,
                });
            }
            let json = resp
                .headers()
                .get(CONTENT_TYPE)
                .and_then(|v| v.to_str().ok())
                .is_none_or(|v| v.contains("json"));
            if !json {
                return Err(ClientError::Malformed("response is not a JSON results document".into()));
            }
            Ok(resp.bytes().await.map_err(classify)?.to_vec())
        };
        // one deadline covers connect, headers and body
        tokio::time::timeout(timeout, work)
            .await
            .map_err(|_| ClientError::Timeout(timeout))?
    }

    /// Runs a SELECT query and parses the JSON results, keeping row order.
    pub async fn execute(&self, endpoint: &str, query: &str) -> Result<BindingSet, ClientError> {
        let body = self.send(endpoint, query, self.timeout).await?;
        Ok(BindingSet::from_json(&body)?)
    }

    /// True when the endpoint answers a trivial ASK within `timeout`.
    pub async fn ping(&self, endpoint: &str, timeout: Duration) -> bool {
        match self.send(endpoint, "ASK {}", timeout).await {
            Ok(body) => serde_json::from_slice::<serde_json::Value>(&body)
                .map(|v| v.get("boolean").is_some_and(|b| b.is_boolean()))
                .unwrap_or(false),
            Err(_) => false,
        }
    }
}
