use std::path::{Path, PathBuf};
use std::process::Command;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use lexshift::index::{build, write_index, Config, LoadedIndex};
use lexshift::service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/toy")
        .join(name)
}

fn toy_index() -> LoadedIndex {
    let config = Config::load(&fixture("lexshift.toml")).unwrap();
    LoadedIndex::from_built(&config, build(&config, &fixture("")).unwrap())
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Option<String>, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let cache = resp.headers().get("x-cache").map(|v| v.to_str().unwrap().to_string());
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, cache, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(body: impl Into<String>) -> Request<Body> {
    Request::post("/api/analysis")
        .header("content-type", "application/json")
        .body(Body::from(body.into()))
        .unwrap()
}

fn request(a: &str, b: &str) -> String {
    json!({ "corpus": "toy", "span_a": span(a), "span_b": span(b), "seed": 0 }).to_string()
}

fn span(s: &str) -> Value {
    let (from, to) = s.split_once(':').unwrap();
    json!({ "from": from.parse::<i32>().unwrap(), "to": to.parse::<i32>().unwrap() })
}

#[tokio::test]
async fn health_and_corpora() {
    let app = router(AppState::ready(toy_index(), 16), None);
    let (status, _, body) = call(&app, get("/api/health")).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["status"], "ready");

    let (status, _, body) = call(&app, get("/api/corpora")).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    let toy = &v["corpora"][0];
    assert_eq!(toy["id"], "toy");
    assert_eq!(toy["year_from"], 1900);
    assert_eq!(toy["year_to"], 1919);
    assert_eq!(toy["years"].as_array().unwrap().len(), 20);
}

#[tokio::test]
async fn analysis_is_deterministic_and_cached() {
    let app = router(AppState::ready(toy_index(), 16), None);
    let (status, cache, first) = call(&app, post(request("1900:1904", "1915:1919"))).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&first));
    assert_eq!(cache.as_deref(), Some("miss"));
    // same logical request, different field order and explicit defaults
    let reordered = json!({
        "seed": 0, "top_k": 50, "lag": 5, "method": "cosine", "pos_filter": { "kind": "all" },
        "span_b": span("1915:1919"), "span_a": span("1900:1904"), "corpus": "toy"
    });
    let (_, cache, second) = call(&app, post(reordered.to_string())).await;
    assert_eq!(cache.as_deref(), Some("hit"));
    assert_eq!(first, second);

    // a fresh service computes the same bytes
    let other = router(AppState::ready(toy_index(), 0), None);
    let (_, cache, third) = call(&other, post(request("1900:1904", "1915:1919"))).await;
    assert_eq!(cache.as_deref(), Some("miss"));
    assert_eq!(first, third);

    let bundle: Value = serde_json::from_slice(&first).unwrap();
    let partials: Vec<f64> = bundle["changers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["partial"].as_f64().unwrap())
        .collect();
    assert!(!partials.is_empty() && partials.len() <= 50);
    assert!(partials.windows(2).all(|w| w[0] >= w[1]));
    assert!(bundle["dendrogram"]["merges"].as_array().unwrap().len() >= 2);
    assert_eq!(bundle["provenance"]["seed"], 0);
    assert_eq!(bundle["provenance"]["sample_target"], 2000);
}

#[tokio::test]
async fn bad_requests_are_rejected() {
    let app = router(AppState::ready(toy_index(), 16), None);
    let cases = [
        (request("1900:1904", "1900:1904"), StatusCode::BAD_REQUEST, "overlap"),
        (request("1900:1904", "1903:1908"), StatusCode::BAD_REQUEST, "overlap"),
        (request("1890:1904", "1915:1919"), StatusCode::BAD_REQUEST, "1890"),
        (request("1904:1900", "1915:1919"), StatusCode::BAD_REQUEST, "1904"),
        (
            "{not json".to_string(),
            StatusCode::BAD_REQUEST,
            "invalid analysis request",
        ),
        (
            json!({ "corpus": "toy", "span_a": span("1900:1904"), "span_b": span("1915:1919"), "top_k": 0 })
                .to_string(),
            StatusCode::BAD_REQUEST,
            "top_k",
        ),
        (
            json!({ "corpus": "nope", "span_a": span("1900:1904"), "span_b": span("1915:1919") }).to_string(),
            StatusCode::NOT_FOUND,
            "nope",
        ),
    ];
    for (body, expected, needle) in cases {
        let (status, _, resp) = call(&app, post(body.clone())).await;
        assert_eq!(status, expected, "{body}");
        let v: Value = serde_json::from_slice(&resp).unwrap();
        let message = v["error"].as_str().unwrap();
        assert!(message.contains(needle), "{message}");
        assert_eq!(v["status"], expected.as_u16());
    }
}

#[tokio::test]
async fn unavailable_while_indexing() {
    let state = AppState::indexing(16);
    let app = router(state.clone(), None);
    let (status, _, _) = call(&app, post(request("1900:1904", "1915:1919"))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, _, _) = call(&app, get("/api/corpora")).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, _, body) = call(&app, get("/api/health")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["status"], "indexing");

    state.set_ready(toy_index());
    let (status, _, _) = call(&app, post(request("1900:1904", "1915:1919"))).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn serves_static_assets() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>explorer</html>").unwrap();
    let app = router(AppState::ready(toy_index(), 16), Some(dir.path().to_path_buf()));
    let (status, _, body) = call(&app, get("/")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>explorer</html>");
    let (status, _, _) = call(&app, get("/api/health")).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _, _) = call(&app, get("/missing.js")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cli_and_service_bundles_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = Config::load(&fixture("lexshift.toml")).unwrap();
    let built = build(&config, &fixture("")).unwrap();
    write_index(&dir.path().join("idx"), &config, &built).unwrap();

    for (a, b, extra) in [
        ("1900:1904", "1915:1919", vec![]),
        (
            "1900:1902",
            "1910:1919",
            vec!["--pos", "content", "--top", "12", "--seed", "1"],
        ),
        (
            "1905:1909",
            "1915:1919",
            vec!["--method", "pearson", "--lag", "3", "--seed", "9"],
        ),
    ] {
        let out = dir.path().join("bundle.json");
        let status = Command::new(env!("CARGO_BIN_EXE_lexshift"))
            .args(["compare", "--index"])
            .arg(dir.path().join("idx"))
            .args(["--corpus", "toy", "--span-a", a, "--span-b", b, "--bundle"])
            .arg(&out)
            .args(&extra)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let cli = std::fs::read(&out).unwrap();

        let loaded = LoadedIndex::load(&dir.path().join("idx")).unwrap();
        let app = router(AppState::ready(loaded, 16), None);
        let mut req: Value = serde_json::from_str(&request(a, b)).unwrap();
        for pair in extra.chunks(2) {
            match pair[0] {
                "--pos" => req["pos_filter"] = json!({ "kind": pair[1] }),
                "--top" => req["top_k"] = json!(pair[1].parse::<usize>().unwrap()),
                "--seed" => req["seed"] = json!(pair[1].parse::<u64>().unwrap()),
                "--method" => req["method"] = json!(pair[1]),
                "--lag" => req["lag"] = json!(pair[1].parse::<u32>().unwrap()),
                other => panic!("{other}"),
            }
        }
        let (status, _, service) = call(&app, post(req.to_string())).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(cli, service, "{a} vs {b} {extra:?}");
    }
}
