mod common;

use std::process::{Command, Output};
use std::sync::Arc;

use common::{local, CAMCORDER};
use feedforge::{FeedService, ServiceConfig};
use feedforge_mock_endpoint::{spawn, MockEndpoint};
use feedforge_testkit::feedcheck::{check_atom, check_rss};

const BIN: &str = env!("CARGO_BIN_EXE_feedforge");

fn config_text(endpoint: &str, dir: &std::path::Path) -> String {
    format!(
        "endpoint_url={endpoint}\ncache_dir={}\npublic_url=http://feeds.test\nfixed_time=2026-10-02T12:00:00Z\n",
        dir.join("cache").display()
    )
}

async fn run(args: Vec<String>) -> Output {
    tokio::task::spawn_blocking(move || {
        Command::new(BIN)
            .args(&args)
            .env_remove("FEEDFORGE_ENDPOINT_URL")
            .env("RUST_LOG", "error")
            .output()
            .unwrap()
    })
    .await
    .unwrap()
}

fn args(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

const CAMCORDER_FLAGS: [&str; 14] = [
    "--mode", "extended", "--q", "camcorder", "--price-min", "100", "--price-max", "500", "--currency", "USD",
    "--image", "true", "--format", "rss",
];

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn gen_output_equals_the_http_body() {
    let mock = spawn(Arc::new(MockEndpoint::fixture()), local()).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("feedforge.conf");
    let text = config_text(&mock.url(), dir.path());
    std::fs::write(&cfg_path, &text).unwrap();
    let out = dir.path().join("feed.xml");

    let mut a = args(&["gen", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    a.extend(args(&CAMCORDER_FLAGS));
    let res = run(a).await;
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let from_cli = std::fs::read(&out).unwrap();

    // same config served over HTTP
    let cfg = ServiceConfig::from_sources(Some(&text), Vec::new()).unwrap();
    let svc = Arc::new(FeedService::new(cfg).unwrap());
    let listener = tokio::net::TcpListener::bind(local()).await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(feedforge::serve(svc, listener, async {
        let _ = rx.await;
    }));
    let mut body = None;
    for _ in 0..100 {
        if let Ok(r) = reqwest::get(format!("http://{addr}/feed?{CAMCORDER}")).await {
            body = Some(r.bytes().await.unwrap().to_vec());
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(20)).await;
    }
    assert_eq!(body.unwrap(), from_cli);
    check_rss(std::str::from_utf8(&from_cli).unwrap()).unwrap();

    let _ = tx.send(());
    let _ = server.await;
    mock.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn formats_agree_on_entities_and_stdout_works() {
    let mock = spawn(Arc::new(MockEndpoint::fixture()), local()).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.conf");
    std::fs::write(&cfg_path, config_text("http://127.0.0.1:9/unused", dir.path())).unwrap();
    let mut ids = Vec::new();
    for format in ["rss", "atom"] {
        let res = run(args(&[
            "gen", "--config", cfg_path.to_str().unwrap(), "--endpoint", &mock.url(), "--q", "camera",
            "--limit", "100", "--format", format,
        ]))
        .await;
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let xml = String::from_utf8(res.stdout).unwrap();
        let facts = if format == "rss" { check_rss(&xml) } else { check_atom(&xml) }.unwrap();
        let mut v: Vec<String> = facts.into_iter().map(|f| f.id).collect();
        v.sort();
        ids.push(v);
    }
    assert!(!ids[0].is_empty());
    assert_eq!(ids[0], ids[1]);
    // the generator never writes to the cache
    assert!(!dir.path().join("cache").exists());
    mock.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn usage_errors_exit_2() {
    let cases: [&[&str]; 5] = [
        &["gen", "--format", "xml", "--q", "cam"],
        &["gen", "--bogus"],
        &["gen", "--q", "cam", "--price-min", "9", "--price-max", "1", "--mode", "extended"],
        &["gen", "--q", "\"} UNION {"],
        &["gen", "--mode", "expert", "--query", "SELECT ?foo WHERE { ?foo ?p ?o }"],
    ];
    for case in cases {
        let res = run(args(case)).await;
        assert_eq!(res.status.code(), Some(2), "{case:?}: {}", String::from_utf8_lossy(&res.stderr));
        assert!(!res.stderr.is_empty());
        assert!(res.stdout.is_empty());
    }
    let res = run(args(&["gen", "--format", "xml"])).await;
    assert!(String::from_utf8_lossy(&res.stderr).contains("Usage"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unreachable_endpoint_exits_1_with_a_diagnostic() {
    let res = run(args(&["gen", "--endpoint", "http://127.0.0.1:9/sparql", "--q", "camcorder"])).await;
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("unreachable"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn environment_overrides_the_config_file() {
    let mock = spawn(Arc::new(MockEndpoint::fixture()), local()).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.conf");
    std::fs::write(&cfg_path, config_text("http://127.0.0.1:9/unused", dir.path())).unwrap();
    let url = mock.url();
    let cfg = cfg_path.to_str().unwrap().to_string();
    let res = tokio::task::spawn_blocking(move || {
        Command::new(BIN)
            .args(["gen", "--config", &cfg, "--q", "camcorder"])
            .env("FEEDFORGE_ENDPOINT_URL", url)
            .env("RUST_LOG", "error")
            .output()
            .unwrap()
    })
    .await
    .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(mock.endpoint.calls(), 1);
    mock.stop().await;
}
