mod common;

use std::time::Duration;

use common::{cache_header, Harness, CAMCORDER};
use feedforge_testkit::feedcheck::{check_atom, check_rss};

fn problem(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn repeat_within_ttl_is_a_byte_identical_hit() {
    let h = Harness::start().await;
    let first = h.feed(CAMCORDER).await;
    assert_eq!(first.status(), 200);
    assert_eq!(cache_header(&first), "MISS");
    assert_eq!(first.headers()["content-type"], "application/rss+xml");
    let first = first.bytes().await.unwrap();
    assert_eq!(h.endpoint.calls(), 1);

    h.clock.advance(chrono::Duration::hours(23));
    let second = h.feed(CAMCORDER).await;
    assert_eq!(cache_header(&second), "HIT");
    assert_eq!(second.bytes().await.unwrap(), first);
    assert_eq!(h.endpoint.calls(), 1);

    let atom = h.feed(&CAMCORDER.replace("format=rss", "format=atom")).await;
    assert_eq!(atom.headers()["content-type"], "application/atom+xml");
    let atom = String::from_utf8(atom.bytes().await.unwrap().to_vec()).unwrap();
    let rss = String::from_utf8(first.to_vec()).unwrap();
    let mut a: Vec<_> = check_atom(&atom).unwrap().into_iter().map(|e| e.id).collect();
    let mut r: Vec<_> = check_rss(&rss).unwrap().into_iter().map(|e| e.id).collect();
    a.sort();
    r.sort();
    assert_eq!(a, r);
    assert!(!a.is_empty());
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn permuted_parameters_share_a_cache_entry() {
    let h = Harness::start().await;
    let mut parts: Vec<&str> = CAMCORDER.split('&').collect();
    let a = h.feed(&parts.join("&")).await;
    assert_eq!(cache_header(&a), "MISS");
    let a = a.bytes().await.unwrap();
    parts.reverse();
    let b = h.feed(&parts.join("&")).await;
    assert_eq!(cache_header(&b), "HIT");
    assert_eq!(b.bytes().await.unwrap(), a);
    // percent-encoding differences do not matter either
    let c = h.feed(&CAMCORDER.replace("camcorder", "%63amcorder")).await;
    assert_eq!(cache_header(&c), "HIT");
    assert_eq!(h.endpoint.calls(), 1);
    assert_eq!(h.svc.cache().unwrap().len(), 1);
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn expert_query_with_foreign_variable_is_rejected() {
    let h = Harness::start().await;
    let qs = url::form_urlencoded::Serializer::new(String::new())
        .append_pair("mode", "expert")
        .append_pair("query", "SELECT ?entity ?title ?foo WHERE { ?entity ?p ?title }")
        .finish();
    let resp = h.feed(&qs).await;
    assert_eq!(resp.status(), 400);
    assert_eq!(resp.headers()["content-type"], "application/problem+json");
    let body = problem(&resp.bytes().await.unwrap());
    assert_eq!(body["status"], 400);
    assert_eq!(body["violations"][0]["code"], "disallowed_variable");
    assert!(body["violations"][0]["message"].as_str().unwrap().contains("?foo"));
    assert_eq!(h.endpoint.calls(), 0);
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn every_violation_is_listed() {
    let h = Harness::start().await;
    let resp = h.feed("mode=extended&q=cam&price_min=9&price_max=1&colour=red&limit=500").await;
    assert_eq!(resp.status(), 400);
    let body = problem(&resp.bytes().await.unwrap());
    let fields: Vec<&str> = body["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["field"].as_str().unwrap())
        .collect();
    for f in ["colour", "limit"] {
        assert!(fields.contains(&f), "{f} missing from {fields:?}");
    }
    let resp = h.feed("mode=basic&q=%22%7D").await;
    assert_eq!(resp.status(), 400);
    let resp = h.feed("mode=extended&q=cam&currency=XYZ").await;
    assert_eq!(resp.status(), 400);
    assert_eq!(h.endpoint.calls(), 0);
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn endpoint_failures_are_not_cached() {
    let h = Harness::start_with(|c| c.request_timeout = Duration::from_millis(300)).await;
    h.endpoint.set_failing(true, 500);
    let resp = h.feed(CAMCORDER).await;
    assert_eq!(resp.status(), 502);
    let body = problem(&resp.bytes().await.unwrap());
    assert_eq!(body["type"], "endpoint-failure");
    assert!(body["detail"].as_str().unwrap().contains("500"));
    assert_eq!(h.svc.cache().unwrap().len(), 0);

    h.endpoint.set_failing(false, 500);
    h.endpoint.set_delay(Duration::from_secs(2));
    let resp = h.feed(CAMCORDER).await;
    assert_eq!(resp.status(), 504);
    assert_eq!(h.svc.cache().unwrap().len(), 0);

    h.endpoint.set_delay(Duration::ZERO);
    let resp = h.feed(CAMCORDER).await;
    assert_eq!(resp.status(), 200);
    assert_eq!(cache_header(&resp), "MISS");
    assert_eq!(h.svc.cache().unwrap().len(), 1);
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn expired_feed_is_served_stale_when_the_endpoint_fails() {
    let h = Harness::start().await;
    let fresh = h.feed(CAMCORDER).await.bytes().await.unwrap();
    h.clock.advance(chrono::Duration::hours(25));
    h.endpoint.set_failing(true, 503);
    let resp = h.feed(CAMCORDER).await;
    assert_eq!(resp.status(), 200);
    assert_eq!(cache_header(&resp), "STALE");
    assert_eq!(resp.bytes().await.unwrap(), fresh);

    h.endpoint.set_failing(false, 503);
    let resp = h.feed(CAMCORDER).await;
    assert_eq!(cache_header(&resp), "MISS");
    let resp = h.feed(CAMCORDER).await;
    assert_eq!(cache_header(&resp), "HIT");
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn healthz_reports_rates_and_endpoint() {
    let mut h = Harness::start().await;
    let body = h.healthz().await;
    assert_eq!(body["status"], "ok");
    assert_eq!(body["rates"]["base"], "EUR");
    assert_eq!(body["rates"]["as_of"], "2026-10-01T00:00:00Z");
    assert_eq!(body["rates"]["stale"], false);
    assert_eq!(body["endpoint"]["reachable"], true);

    // a cached feed keeps being served once the endpoint is gone
    let cached = h.feed(CAMCORDER).await.bytes().await.unwrap();
    h.stop_mock().await;
    let body = h.healthz().await;
    assert_eq!(body["status"], "degraded");
    assert_eq!(body["endpoint"]["reachable"], false);
    assert_eq!(body["cache_records"], 1);
    let resp = h.feed(CAMCORDER).await;
    assert_eq!(cache_header(&resp), "HIT");
    assert_eq!(resp.bytes().await.unwrap(), cached);
    let resp = h.feed("q=camcorder").await;
    assert_eq!(resp.status(), 502);
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn healthz_degrades_when_rates_age() {
    let h = Harness::start().await;
    h.clock.advance(chrono::Duration::days(8));
    let body = h.healthz().await;
    assert_eq!(body["status"], "degraded");
    assert_eq!(body["rates"]["stale"], true);
    assert_eq!(body["endpoint"]["reachable"], true);
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn currency_without_rates_is_unavailable() {
    let h = Harness::start_with(|c| c.set("rate_source", "/nonexistent/rates.txt").unwrap()).await;
    let body = h.healthz().await;
    assert_eq!(body["status"], "degraded");
    assert!(body["rates"].is_null());
    assert!(body["rate_error"].as_str().unwrap().contains("/nonexistent/rates.txt"));
    let resp = h.feed(CAMCORDER).await;
    assert_eq!(resp.status(), 503);
    // requests without a target currency still work
    let resp = h.feed("q=camcorder").await;
    assert_eq!(resp.status(), 200);
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn self_link_follows_the_host_header() {
    let h = Harness::start_with(|c| c.public_url = None).await;
    let resp = h
        .http
        .get(h.url("q=camcorder&format=atom"))
        .header("host", "shop-feeds.example:8443")
        .send()
        .await
        .unwrap();
    let body = String::from_utf8(resp.bytes().await.unwrap().to_vec()).unwrap();
    assert!(
        body.contains(r#"href="http://shop-feeds.example:8443/feed?format=atom&amp;mode=basic&amp;q=camcorder""#),
        "{body}"
    );
    h.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn output_is_deterministic_for_a_fixed_clock() {
    let a = Harness::start().await;
    let url = a.mock.as_ref().unwrap().url();
    // same config, separate cache directory and process state
    let b = Harness::start_with(|c| c.set("endpoint_url", &url).unwrap()).await;
    for qs in [CAMCORDER, "q=camera&format=atom", "mode=extended&q=camera&lat=48.1351&lon=11.582&radius_km=100"] {
        let x = a.feed(qs).await.bytes().await.unwrap();
        let y = b.feed(qs).await.bytes().await.unwrap();
        assert_eq!(x, y, "{qs}");
    }
    a.stop().await;
    b.stop().await;
}
