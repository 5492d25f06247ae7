use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use majutsu_core::scene::{load_document, validate_glb};
use majutsu_eval::study::StudyConfig;
use majutsu_orchestrator::{load_libraries, router, serve_listener, AppState, PipelineConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn base_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.provider.map_size = 128;
    cfg.fan_out = 2;
    cfg
}

fn study() -> StudyConfig {
    StudyConfig {
        images: BTreeMap::from([
            ("ours".to_string(), vec!["ours/1".to_string(), "ours/2".to_string()]),
            ("baseline".to_string(), vec!["base/1".to_string(), "base/2".to_string()]),
        ]),
        seed: 1,
    }
}

fn state() -> Arc<AppState> {
    Arc::new(AppState::in_memory(base_config(), load_libraries(&[]).unwrap(), study()).unwrap())
}

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.bytes)))
    }
}

async fn call(app: &Router, method: Method, uri: &str, ctype: Option<&str>, body: impl Into<Body>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(c) = ctype {
        req = req.header(header::CONTENT_TYPE, c);
    }
    let resp = app.clone().oneshot(req.body(body.into()).unwrap()).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, bytes }
}

async fn get(app: &Router, uri: &str) -> Reply {
    call(app, Method::GET, uri, None, Body::empty()).await
}

async fn post_json(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some("application/json"), body.to_string()).await
}

async fn post_text(app: &Router, uri: &str, text: &str) -> Reply {
    call(app, Method::POST, uri, Some("text/plain"), text.to_string()).await
}

/// Creates a session from a prompt; returns its id and first building id.
async fn create(app: &Router) -> (String, String) {
    let r = post_json(app, "/sessions", json!({ "prompt": "compact harbour town", "seed": 3 })).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.bytes));
    let v = r.json();
    assert_eq!(v["revision"], 1);
    let id = v["id"].as_str().unwrap().to_string();
    let scene = get(app, &format!("/sessions/{id}/scene")).await;
    let doc = load_document(&scene.bytes).unwrap();
    let bldg = doc.instances.iter().find(|i| i.id.starts_with("bldg_")).expect("a building").id.clone();
    (id, bldg)
}

#[tokio::test]
async fn healthz_and_unknown_session() {
    let app = router(state());
    let r = get(&app, "/healthz").await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["status"], "ok");
    let r = get(&app, "/sessions/session-9999").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["error"], "not_found");
}

#[tokio::test]
async fn command_round_trip_with_undo_and_redo() {
    let app = router(state());
    let (id, bldg) = create(&app).await;
    let before = get(&app, &format!("/sessions/{id}")).await.json()["instances"].as_u64().unwrap();

    let r = post_text(&app, &format!("/sessions/{id}/commands"), &format!("delete {bldg}")).await;
    assert_eq!(r.status, StatusCode::OK);
    let v = r.json();
    assert_eq!(v["revision"], 2);
    assert_eq!(v["diff"]["removed"], json!([bldg]));
    assert_eq!(v["command"], format!("delete {bldg}"));
    let info = get(&app, &format!("/sessions/{id}")).await.json();
    assert_eq!(info["instances"].as_u64().unwrap(), before - 1);
    assert_eq!(info["can_undo"], true);

    let r = post_json(&app, &format!("/sessions/{id}/undo"), json!({ "base_revision": 2 })).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["diff"]["added"], json!([bldg]));
    assert_eq!(r.json()["revision"], 3);

    let r = call(&app, Method::POST, &format!("/sessions/{id}/redo"), None, Body::empty()).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.json()["diff"]["removed"], json!([bldg]));
    let r = call(&app, Method::POST, &format!("/sessions/{id}/redo"), None, Body::empty()).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["error"], "nothing_to_redo");
}

#[tokio::test]
async fn command_body_forms() {
    let app = router(state());
    let (id, bldg) = create(&app).await;
    let uri = format!("/sessions/{id}/commands");

    let r = post_json(&app, &uri, json!({ "command": format!("move {bldg} by (5,0)"), "base_revision": 1 })).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.bytes));
    let structured = json!({ "op": "move", "id": bldg, "d_translation": [5.0, 0.0, 0.0] });
    let r = post_json(&app, &uri, json!({ "command": structured })).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.bytes));
    let r = post_json(&app, &format!("{uri}?base_revision=3"), json!({ "op": "edit", "id": bldg, "patch": { "height": "33" } })).await;
    assert_eq!(r.status, StatusCode::OK, "{}", String::from_utf8_lossy(&r.bytes));
    assert_eq!(r.json()["revision"], 4);

    // Two Δx = 5 moves compose to Δx = 10.
    let doc0 = {
        let r = post_json(&app, "/sessions", json!({ "prompt": "compact harbour town", "seed": 3 })).await;
        let other = r.json()["id"].as_str().unwrap().to_string();
        load_document(&get(&app, &format!("/sessions/{other}/scene")).await.bytes).unwrap()
    };
    let doc = load_document(&get(&app, &format!("/sessions/{id}/scene")).await.bytes).unwrap();
    let (p0, p1) = (doc0.instance(&bldg).unwrap().placement, doc.instance(&bldg).unwrap().placement);
    assert_eq!(p1.translation.x, p0.translation.x + 5.0 + 5.0);
    assert_eq!(p1.translation.y, p0.translation.y);
}

#[tokio::test]
async fn command_errors_map_to_status_codes() {
    let app = router(state());
    let (id, bldg) = create(&app).await;
    let uri = format!("/sessions/{id}/commands");

    let r = post_text(&app, &uri, "delete bldg_9999").await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["error"], "unknown_instance");
    let r = post_text(&app, &uri, &format!("replace {bldg} with no_such_material")).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = post_text(&app, &uri, "dance wildly").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = call(&app, Method::POST, &uri, Some("application/json"), "{not json").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post_json(&app, &uri, json!({ "command": "delete x", "bogus": 1 })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post_text(&app, &format!("{uri}?base_revision=7"), &format!("delete {bldg}")).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["error"], "revision_conflict");
    let r = post_json(&app, &format!("/sessions/{id}/undo"), json!({})).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    // None of the failures moved the revision.
    assert_eq!(get(&app, &format!("/sessions/{id}")).await.json()["revision"], 1);
}

#[tokio::test]
async fn session_creation_inputs() {
    let app = router(state());
    let r = post_json(&app, "/sessions", json!({})).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post_json(&app, "/sessions", json!({ "prompt": "x", "document": {} })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post_json(&app, "/sessions", json!({ "prompt": "x", "layout_path": "l.png", "height_path": "h.png" })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let r = post_json(&app, "/sessions", json!({ "document": { "not": "a scene" } })).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let (id, _) = create(&app).await;
    let scene: Value = get(&app, &format!("/sessions/{id}/scene")).await.json();
    let r = post_json(&app, "/sessions", json!({ "document": scene })).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let copy = r.json()["id"].as_str().unwrap().to_string();
    assert_ne!(copy, id);
    let a = get(&app, &format!("/sessions/{id}/scene")).await.bytes;
    let b = get(&app, &format!("/sessions/{copy}/scene")).await.bytes;
    assert_eq!(a, b);
    assert_eq!(get(&app, "/sessions").await.json().as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn scene_exports_glb() {
    let app = router(state());
    let (id, _) = create(&app).await;
    let r = get(&app, &format!("/sessions/{id}/scene?format=glb")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.headers[header::CONTENT_TYPE], "model/gltf-binary");
    assert_eq!(r.headers[header::ETAG], "\"1\"");
    validate_glb(&r.bytes).unwrap();
    let req = Request::get(format!("/sessions/{id}/scene"))
        .header(header::ACCEPT, "model/gltf-binary")
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(bytes.as_ref(), r.bytes.as_slice());
    assert_eq!(get(&app, &format!("/sessions/{id}/scene?format=obj")).await.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn long_poll_wakes_on_change() {
    let app = router(state());
    let (id, bldg) = create(&app).await;

    let r = get(&app, &format!("/sessions/{id}/events?since=0&timeout_ms=10")).await;
    let v = r.json();
    assert_eq!(v["events"][0]["action"], "created");

    let r = get(&app, &format!("/sessions/{id}/events?since=1&timeout_ms=50")).await;
    assert_eq!(r.json()["events"], json!([]));

    let waiter = {
        let app = app.clone();
        let uri = format!("/sessions/{id}/events?since=1&timeout_ms=10000");
        tokio::spawn(async move { get(&app, &uri).await.json() })
    };
    tokio::time::sleep(Duration::from_millis(50)).await;
    assert!(!waiter.is_finished());
    post_text(&app, &format!("/sessions/{id}/commands"), &format!("delete {bldg}")).await;
    let v = tokio::time::timeout(Duration::from_secs(5), waiter).await.unwrap().unwrap();
    assert_eq!(v["revision"], 2);
    assert_eq!(v["events"][0]["action"], "apply");
    assert_eq!(v["events"][0]["diff"]["removed"], json!([bldg]));
}

#[tokio::test]
async fn concurrent_commands_are_serialized() {
    let app = router(state());
    let (id, bldg) = create(&app).await;
    let x0 = load_document(&get(&app, &format!("/sessions/{id}/scene")).await.bytes)
        .unwrap()
        .instance(&bldg)
        .unwrap()
        .placement
        .translation
        .x;
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let (app, uri, text) = (app.clone(), format!("/sessions/{id}/commands"), format!("move {bldg} by (0.5,0)"));
            tokio::spawn(async move { post_text(&app, &uri, &text).await.json()["revision"].as_u64().unwrap() })
        })
        .collect();
    let mut revs = Vec::new();
    for t in tasks {
        revs.push(t.await.unwrap());
    }
    revs.sort();
    assert_eq!(revs, (2..18).collect::<Vec<u64>>());
    let doc = load_document(&get(&app, &format!("/sessions/{id}/scene")).await.bytes).unwrap();
    assert_eq!(doc.revision, 17);
    assert_eq!(doc.instance(&bldg).unwrap().placement.translation.x, x0 + 8.0);
    let events = get(&app, &format!("/sessions/{id}/events?since=1&timeout_ms=0")).await.json();
    let seen: Vec<u64> = events["events"].as_array().unwrap().iter().map(|e| e["revision"].as_u64().unwrap()).collect();
    assert_eq!(seen, (2..18).collect::<Vec<u64>>());
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let open = || Arc::new(AppState::open(dir.path(), base_config(), load_libraries(&[]).unwrap(), study()).unwrap());
    let (id, bldg) = {
        let app = router(open());
        let (id, bldg) = create(&app).await;
        let r = post_text(&app, &format!("/sessions/{id}/commands"), &format!("delete {bldg}")).await;
        assert_eq!(r.status, StatusCode::OK);
        let pairs = get(&app, "/eval/schedule?limit=1").await.json();
        let p = &pairs["pairs"][0];
        let verdict = json!({ "dimension": p["dimension"], "image_a": p["image_a"], "image_b": p["image_b"],
            "winner": "A", "pair_id": p["pair_id"] });
        assert_eq!(post_json(&app, "/eval/verdicts", verdict).await.status, StatusCode::CREATED);
        (id, bldg)
    };
    let app = router(open());
    let info = get(&app, &format!("/sessions/{id}")).await.json();
    assert_eq!(info["revision"], 2);
    let doc = load_document(&get(&app, &format!("/sessions/{id}/scene")).await.bytes).unwrap();
    assert!(doc.instance(&bldg).is_none());
    assert_eq!(doc.undo_stack.len(), 1);
    let ev = get(&app, &format!("/sessions/{id}/events?since=0&timeout_ms=0")).await.json();
    assert_eq!(ev["events"][0]["action"], "snapshot");
    assert_eq!(ev["events"][0]["revision"], 2);
    // Undo still works on the restored history, and new ids do not collide.
    assert_eq!(post_json(&app, &format!("/sessions/{id}/undo"), json!({})).await.status, StatusCode::OK);
    let (id2, _) = create(&app).await;
    assert_ne!(id2, id);
    assert_eq!(get(&app, "/eval/leaderboard").await.json()["record_count"], 1);
}

#[tokio::test]
async fn judging_flow() {
    let app = router(state());
    let s = get(&app, "/eval/schedule?dimension=svc").await;
    assert_eq!(s.status, StatusCode::OK, "{}", String::from_utf8_lossy(&s.bytes));
    let s = s.json();
    let pending = s["pending"].as_u64().unwrap();
    assert!(pending >= 10);
    let pair = s["pairs"][0].clone();
    // Blind: no method labels before a verdict.
    let text = s.to_string();
    assert!(!text.contains("method") && !text.contains("ours\"") && !text.contains("baseline"));

    let board = get(&app, "/eval/leaderboard").await.json();
    assert_eq!(board["record_count"], 0);

    let verdict = json!({ "dimension": pair["dimension"], "image_a": pair["image_a"], "image_b": pair["image_b"],
        "winner": "B", "pair_id": pair["pair_id"] });
    let r = post_json(&app, "/eval/verdicts", verdict.clone()).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.bytes));
    let stored = r.json();
    assert!(!stored["method_a"].as_str().unwrap().is_empty());
    assert_eq!(stored["timestamp"], 1);

    assert_eq!(get(&app, "/eval/leaderboard").await.json()["record_count"], 1);
    let after = get(&app, "/eval/schedule?dimension=svc").await.json();
    assert_eq!(after["pending"].as_u64().unwrap(), pending - 1);

    let r = post_json(&app, "/eval/verdicts", verdict).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let ghost = json!({ "dimension": pair["dimension"], "image_a": "ghost", "image_b": pair["image_b"], "winner": "A" });
    assert_eq!(post_json(&app, "/eval/verdicts", ghost).await.status, StatusCode::NOT_FOUND);
    let r = call(&app, Method::POST, "/eval/verdicts", Some("application/json"), "[1,").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/eval/schedule?dimension=zzz").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/eval/leaderboard").await.json()["record_count"], 1);
}

#[tokio::test]
async fn serves_over_tcp() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let server = tokio::spawn(serve_listener(listener, state()));
    let client = reqwest::Client::new();
    let health: Value = client.get(format!("http://{addr}/healthz")).send().await.unwrap().json().await.unwrap();
    assert_eq!(health["status"], "ok");
    let r = client
        .post(format!("http://{addr}/sessions"))
        .json(&json!({ "prompt": "compact harbour town", "seed": 3 }))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status().as_u16(), 201);
    let id = r.json::<Value>().await.unwrap()["id"].as_str().unwrap().to_string();
    let r = client
        .post(format!("http://{addr}/sessions/{id}/commands"))
        .header("content-type", "text/plain")
        .body("delete bldg_9999")
        .send()
        .await
        .unwrap();
    assert_eq!(r.status().as_u16(), 404);
    server.abort();
}
