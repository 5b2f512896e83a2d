#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use feedforge::{FeedService, ServiceConfig};
use feedforge_core::clock::ManualClock;
use feedforge_mock_endpoint::{spawn, MockEndpoint, RunningEndpoint};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub fn local() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

/// A day after the fixture's rate date, so its rates are fresh.
pub fn t0() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2026-10-02T12:00:00Z").unwrap().with_timezone(&Utc)
}

pub const CAMCORDER: &str = "mode=extended&q=camcorder&price_min=100&price_max=500&currency=USD&image=true&format=rss";

pub struct Harness {
    pub mock: Option<RunningEndpoint>,
    pub endpoint: Arc<MockEndpoint>,
    pub svc: Arc<FeedService>,
    pub clock: Arc<ManualClock>,
    pub addr: SocketAddr,
    pub http: reqwest::Client,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
    pub dir: tempfile::TempDir,
}

/// Config pointing at `endpoint_url` with a fresh cache directory.
pub fn config(endpoint_url: &str, dir: &std::path::Path) -> ServiceConfig {
    let mut cfg = ServiceConfig::default();
    cfg.set("endpoint_url", endpoint_url).unwrap();
    cfg.cache_dir = dir.join("cache");
    cfg.public_url = Some("http://feeds.test/".parse().unwrap());
    cfg
}

impl Harness {
    pub async fn start() -> Self {
        Self::start_with(|_| {}).await
    }

    pub async fn start_with(configure: impl FnOnce(&mut ServiceConfig)) -> Self {
        let endpoint = Arc::new(MockEndpoint::fixture());
        let mock = spawn(endpoint.clone(), local()).await.unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(&mock.url(), dir.path());
        configure(&mut cfg);
        let clock = Arc::new(ManualClock::new(t0()));
        let svc = Arc::new(FeedService::with_clock(cfg, clock.clone()).unwrap());
        let listener = tokio::net::TcpListener::bind(local()).await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(feedforge::serve(svc.clone(), listener, async {
            let _ = rx.await;
        }));
        // serve() loads rates before accepting; wait until it answers
        let http = reqwest::Client::new();
        for _ in 0..200 {
            if http.get(format!("http://{addr}/healthz")).send().await.is_ok() {
                break;
            }
            tokio::time::sleep(std::time::Duration::from_millis(10)).await;
        }
        endpoint.reset_calls();
        Harness {
            mock: Some(mock),
            endpoint,
            svc,
            clock,
            addr,
            http,
            shutdown: Some(tx),
            task,
            dir,
        }
    }

    pub fn url(&self, qs: &str) -> String {
        format!("http://{}/feed?{qs}", self.addr)
    }

    pub async fn feed(&self, qs: &str) -> reqwest::Response {
        self.http.get(self.url(qs)).send().await.unwrap()
    }

    pub async fn healthz(&self) -> serde_json::Value {
        let resp = self.http.get(format!("http://{}/healthz", self.addr)).send().await.unwrap();
        assert_eq!(resp.status(), 200);
        serde_json::from_slice(&resp.bytes().await.unwrap()).unwrap()
    }

    pub async fn stop_mock(&mut self) {
        if let Some(m) = self.mock.take() {
            m.stop().await;
        }
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = tokio::time::timeout(std::time::Duration::from_secs(2), &mut self.task).await;
        self.stop_mock().await;
    }
}

pub fn cache_header(resp: &reqwest::Response) -> String {
    resp.headers()
        .get("x-feed-cache")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default()
}
