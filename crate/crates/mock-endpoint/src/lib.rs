//! A SPARQL Protocol endpoint over an in-memory store.
//!
//! Serves `GET /sparql?query=...` and `POST /sparql` (form-encoded or
//! `application/sparql-query`) with JSON results. Virtuoso's
//! `?v bif:contains "'kw'"` is rewritten to a case-insensitive substring
//! filter so queries in either dialect run unchanged.
//!
//! Tests can count calls, add latency, or make every request fail.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU16, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, LazyLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use oxigraph::io::RdfFormat;
use oxigraph::sparql::results::QueryResultsFormat;
use oxigraph::sparql::{Query as SparqlQuery, QueryResults};
use oxigraph::store::Store;
use regex::Regex;
use serde::Deserialize;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

/// The bundled dataset: 50 offers, a handful of stores, and EUR-based rates.
pub const FIXTURE: &str = include_str!("../data/offers.ttl");

pub const RESULTS_JSON: &str = "application/sparql-results+json";

#[derive(Debug)]
pub struct LoadError(String);

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "cannot load dataset: {}", self.0)
    }
}

impl std::error::Error for LoadError {}

/// Shared endpoint state.
pub struct MockEndpoint {
    store: Store,
    calls: AtomicUsize,
    delay_ms: AtomicU64,
    failing: AtomicBool,
    fail_status: AtomicU16,
}

impl std::fmt::Debug for MockEndpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MockEndpoint")
            .field("calls", &self.calls())
            .field("failing", &self.failing.load(Ordering::SeqCst))
            .finish()
    }
}

impl MockEndpoint {
    pub fn from_turtle(turtle: &str) -> Result<Self, LoadError> {
        let store = Store::new().map_err(|e| LoadError(e.to_string()))?;
        store
            .load_from_reader(RdfFormat::Turtle, turtle.as_bytes())
            .map_err(|e| LoadError(e.to_string()))?;
        Ok(MockEndpoint {
            store,
            calls: AtomicUsize::new(0),
            delay_ms: AtomicU64::new(0),
            failing: AtomicBool::new(false),
            fail_status: AtomicU16::new(500),
        })
    }

    pub fn fixture() -> Self {
        MockEndpoint::from_turtle(FIXTURE).expect("bundled fixture parses")
    }

    /// Requests received on `/sparql`, including failed ones.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::SeqCst);
    }

    pub fn set_delay(&self, delay: Duration) {
        self.delay_ms.store(delay.as_millis() as u64, Ordering::SeqCst);
    }

    /// While set, every query is answered with `status` and a plain-text body.
    pub fn set_failing(&self, failing: bool, status: u16) {
        self.fail_status.store(status, Ordering::SeqCst);
        self.failing.store(failing, Ordering::SeqCst);
    }

    /// Evaluates a query to a JSON results document.
    pub fn evaluate(&self, query: &str) -> Result<Vec<u8>, (StatusCode, String)> {
        let rewritten = rewrite_fulltext(query);
        let parsed = SparqlQuery::parse(&rewritten, None)
            .map_err(|e| (StatusCode::BAD_REQUEST, format!("query parse error: {e}")))?;
        let results = self
            .store
            .query(parsed)
            .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        let mut out = Vec::new();
        match results {
            QueryResults::Graph(_) => {
                return Err((StatusCode::BAD_REQUEST, "only SELECT and ASK are supported".into()));
            }
            other => other
                .write(&mut out, QueryResultsFormat::Json)
                .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?,
        };
        Ok(out)
    }
}

static BIF_CONTAINS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(\?[A-Za-z_][A-Za-z0-9_]*)\s+bif:contains\s+"'([^'"\\]*)'"\s*\.?"#).unwrap()
});

/// Rewrites `?v bif:contains "'kw'" .` into a SPARQL 1.1 substring filter.
pub fn rewrite_fulltext(query: &str) -> String {
    BIF_CONTAINS
        .replace_all(query, |c: &regex::Captures<'_>| {
            format!("FILTER(CONTAINS(LCASE(STR({})), \"{}\"))", &c[1], c[2].to_lowercase())
        })
        .into_owned()
}

#[derive(Deserialize)]
struct QueryParams {
    query: Option<String>,
}

async fn answer(ep: &MockEndpoint, query: Option<String>) -> Response {
    ep.calls.fetch_add(1, Ordering::SeqCst);
    let delay = ep.delay_ms.load(Ordering::SeqCst);
    if delay > 0 {
        tokio::time::sleep(Duration::from_millis(delay)).await;
    }
    if ep.failing.load(Ordering::SeqCst) {
        let status = StatusCode::from_u16(ep.fail_status.load(Ordering::SeqCst))
            .unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        return (status, "mock endpoint failure").into_response();
    }
    let Some(query) = query else {
        return (StatusCode::BAD_REQUEST, "missing query").into_response();
    };
    match ep.evaluate(&query) {
        Ok(body) => ([(header::CONTENT_TYPE, RESULTS_JSON)], body).into_response(),
        Err((status, message)) => {
            tracing::debug!(%status, %message, "query rejected");
            (status, message).into_response()
        }
    }
}

async fn sparql_get(State(ep): State<Arc<MockEndpoint>>, Query(p): Query<QueryParams>) -> Response {
    answer(&ep, p.query).await
}

async fn sparql_post(State(ep): State<Arc<MockEndpoint>>, headers: HeaderMap, body: Bytes) -> Response {
    let ctype = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    let query = if ctype.starts_with("application/sparql-query") {
        String::from_utf8(body.to_vec()).ok()
    } else if ctype.starts_with("application/x-www-form-urlencoded") {
        form_query(&body)
    } else {
        return (StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported content type").into_response();
    };
    answer(&ep, query).await
}

fn form_query(body: &[u8]) -> Option<String> {
    url::form_urlencoded::parse(body)
        .find(|(k, _)| k == "query")
        .map(|(_, v)| v.into_owned())
}

pub fn router(ep: Arc<MockEndpoint>) -> Router {
    Router::new()
        .route("/sparql", get(sparql_get).post(sparql_post))
        .with_state(ep)
}

/// A server running on a background task.
pub struct RunningEndpoint {
    pub addr: SocketAddr,
    pub endpoint: Arc<MockEndpoint>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

impl RunningEndpoint {
    /// `http://127.0.0.1:PORT/sparql`
    pub fn url(&self) -> String {
        format!("http://{}/sparql", self.addr)
    }

    /// Stops accepting connections and waits briefly for the server task to end.
    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = tokio::time::timeout(Duration::from_secs(2), &mut self.task).await;
    }
}

impl Drop for RunningEndpoint {
    fn drop(&mut self) {
        self.task.abort();
    }
}

/// Binds `addr` (port 0 for an ephemeral port) and serves in the background.
pub async fn spawn(ep: Arc<MockEndpoint>, addr: SocketAddr) -> std::io::Result<RunningEndpoint> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(ep.clone());
    let task = tokio::spawn(async move {
        let _ = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
    });
    Ok(RunningEndpoint {
        addr,
        endpoint: ep,
        shutdown: Some(tx),
        task,
    })
}

/// Serves until the process is stopped.
pub async fn serve(ep: Arc<MockEndpoint>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "mock endpoint listening");
    axum::serve(listener, router(ep)).await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewrites_bif_contains() {
        let q = "SELECT * WHERE { ?s ?p ?title .\n  ?title bif:contains \"'CamCorder'\" .\n}";
        assert_eq!(
            rewrite_fulltext(q),
            "SELECT * WHERE { ?s ?p ?title .\n  FILTER(CONTAINS(LCASE(STR(?title)), \"camcorder\"))\n}"
        );
    }

    #[test]
    fn fixture_loads() {
        let ep = MockEndpoint::fixture();
        let body = ep
            .evaluate("SELECT (COUNT(?o) AS ?n) WHERE { ?o a <http://purl.org/goodrelations/v1#Offering> }")
            .unwrap();
        let text = String::from_utf8(body).unwrap();
        assert!(text.contains("\"50\""), "{text}");
    }

    #[test]
    fn parse_errors_are_client_errors() {
        let ep = MockEndpoint::fixture();
        let (status, _) = ep.evaluate("SELEKT nothing").unwrap_err();
        assert_eq!(status, StatusCode::BAD_REQUEST);
    }
}
