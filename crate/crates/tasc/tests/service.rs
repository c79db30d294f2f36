use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tasc::http::router;
use tasc::Engine;
use tasc_core::milp::SolveConfig;
use tower::ServiceExt;

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn engine(sessions: Option<PathBuf>) -> Arc<Engine> {
    Arc::new(Engine::open(scenarios(), sessions, SolveConfig::default()).unwrap())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &Router, scenario: &str) -> (String, Value) {
    let (status, body) = call(app, Method::POST, "/sessions", Some(&json!({ "scenario": scenario }).to_string())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    (body["session_id"].as_str().unwrap().to_string(), body)
}

async fn act(app: &Router, id: &str, action: Value) -> (StatusCode, Value) {
    call(app, Method::POST, &format!("/sessions/{id}/actions"), Some(&action.to_string())).await
}

fn say(text: &str) -> Value {
    json!({ "action": "submit_utterance", "text": text })
}

fn masked(mut v: Value, id: &str) -> String {
    fn walk(v: &mut Value, id: &str) {
        match v {
            Value::String(s) if s == id => *s = "<session>".into(),
            Value::Array(xs) => xs.iter_mut().for_each(|x| walk(x, id)),
            Value::Object(m) => {
                if let Some(t) = m.get_mut("received_at_ms") {
                    *t = json!(0);
                }
                m.values_mut().for_each(|x| walk(x, id))
            }
            _ => {}
        }
    }
    walk(&mut v, id);
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("TASC_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    assert_eq!(actual, std::fs::read_to_string(&path).unwrap(), "{name} drifted");
}

#[tokio::test]
async fn new_session_starts_at_revision_one() {
    let app = router(engine(None));
    let (id, body) = create(&app, "two_dish").await;
    assert_eq!(body["state"]["revision"], 1);
    assert_eq!(body["state"]["scenario"]["agents"].as_array().unwrap().len(), 2);
    assert_eq!(body["state"]["directives"], json!([]));
    golden("created.json", &masked(body, &id));
    let (status, state) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["revision"], 1);
}

#[tokio::test]
async fn dialogue_envelopes_match_golden() {
    let app = router(engine(None));
    let (id, _) = create(&app, "two_dish").await;
    let steps = [
        ("echo.json", say("task pot1 should be completed after task chop2")),
        ("warning.json", say("task chop2 should be completed after task pot1")),
        ("resolved.json", json!({ "action": "resolve_warning", "resolution": { "choice": "remove" } })),
        ("solved.json", json!({ "action": "request_solve" })),
        ("why.json", json!({ "action": "ask_why", "agent": "a2", "task": "serve2", "polarity": "why_not" })),
    ];
    for (n, (file, action)) in steps.into_iter().enumerate() {
        let (status, body) = act(&app, &id, action).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_eq!(body["revision"], n as u64 + 2);
        golden(file, &masked(body, &id));
    }
    let (_, solution) = call(&app, Method::GET, &format!("/sessions/{id}/solution"), None).await;
    assert_eq!(solution["verdict"], "pass");
    assert_eq!(solution["execution"]["score"], solution["schedule"]["breakdown"]["reward"]);
    golden("solution.json", &masked(solution, &id));
}

#[tokio::test]
async fn why_query_returns_an_explanation() {
    let app = router(engine(None));
    let (id, _) = create(&app, "two_dish").await;
    let (_, body) = act(&app, &id, say("why wasn't agent a2 assigned to task chop2?")).await;
    assert_eq!(body["response"]["response"], "explanation_text");
    assert_eq!(body["response"]["explanation"]["query"]["task"], "chop2");
    assert!(body["response"]["explanation"]["kind"]["kind"].is_string());
    assert!(body["response"]["text"].as_str().unwrap().contains("a2"));
}

#[tokio::test]
async fn unknown_sessions_are_not_found() {
    let app = router(engine(None));
    for (method, uri) in [
        (Method::GET, "/sessions/nope/state"),
        (Method::GET, "/sessions/nope/solution"),
        (Method::GET, "/sessions/nope/events"),
        (Method::DELETE, "/sessions/nope"),
    ] {
        let (status, body) = call(&app, method, uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert!(body["error"].as_str().unwrap().contains("nope"));
    }
    let (status, _) = act(&app, "nope", json!("garbage")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, Method::POST, "/sessions", Some(r#"{"scenario": "missing"}"#)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, Method::POST, "/sessions", Some(r#"{"scenario": "../etc/passwd"}"#)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_bodies_are_bad_requests() {
    let app = router(engine(None));
    let (id, _) = create(&app, "wall_column").await;
    for bad in ["{", r#"{"action": "dance"}"#, r#"{"action": "submit_utterance"}"#, "[]"] {
        let (status, body) = call(&app, Method::POST, &format!("/sessions/{id}/actions"), Some(bad)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
        assert!(body["error"].as_str().unwrap().starts_with("malformed body"));
    }
    let (status, _) = call(&app, Method::POST, "/sessions", Some(r#"{"scenario": 3}"#)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, state) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert_eq!(state["revision"], 1, "rejected bodies do not touch the session");
}

#[tokio::test]
async fn deleted_sessions_are_gone() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(engine(Some(dir.path().to_path_buf())));
    let (id, _) = create(&app, "wall_column").await;
    assert!(dir.path().join(format!("{id}.json")).exists());
    let (status, _) = call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    assert!(!dir.path().join(format!("{id}.json")).exists());
    let (status, _) = call(&app, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

async fn next_event(body: &mut Body, buffer: &mut String) -> (u64, Value) {
    loop {
        if let Some(end) = buffer.find("\n\n") {
            let block: String = buffer.drain(..end + 2).collect();
            let mut id = None;
            let mut data = None;
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("id: ") {
                    id = Some(v.parse().unwrap());
                } else if let Some(v) = line.strip_prefix("data: ") {
                    data = Some(serde_json::from_str(v).unwrap());
                }
            }
            if let (Some(id), Some(data)) = (id, data) {
                return (id, data);
            }
            continue;
        }
        let frame = body.frame().await.expect("stream ended").unwrap();
        if let Ok(bytes) = frame.into_data() {
            buffer.push_str(std::str::from_utf8(&bytes).unwrap());
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_commands_are_ordered_on_the_stream() {
    let app = router(engine(None));
    let (id, _) = create(&app, "two_dish").await;
    let req = Request::get(format!("/sessions/{id}/events")).body(Body::empty()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    assert_eq!(res.headers()["content-type"], "text/event-stream");
    let mut stream = res.into_body();

    let sentences = [
        "agent a1 may take at most 3 tasks",
        "task serve2 must be completed",
        "forbid agent a2 from task chop2",
        "solve",
    ];
    let handles: Vec<_> = sentences
        .iter()
        .map(|s| {
            let app = app.clone();
            let id = id.clone();
            let action = say(s);
            tokio::spawn(async move { act(&app, &id, action).await.1 })
        })
        .collect();
    let mut replies = Vec::new();
    for h in handles {
        replies.push(h.await.unwrap());
    }
    let mut revisions: Vec<u64> = replies.iter().map(|r| r["revision"].as_u64().unwrap()).collect();
    revisions.sort();
    assert_eq!(revisions, vec![2, 3, 4, 5]);

    let mut buffer = String::new();
    for expected in 2..=5u64 {
        let (event_id, event) = next_event(&mut stream, &mut buffer).await;
        assert_eq!(event_id, expected);
        assert_eq!(event["revision"], expected);
        let reply = replies.iter().find(|r| r["revision"] == expected).unwrap();
        assert_eq!(&event, reply, "stream and reply disagree at {expected}");
    }
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let first = router(engine(Some(dir.path().to_path_buf())));
    let (id, _) = create(&first, "two_dish").await;
    act(&first, &id, say("assign agent a1 to task chop2")).await;
    act(&first, &id, say("forbid agent a1 from task chop2")).await;
    let (_, before) = call(&first, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert!(before["pending"].is_object());
    drop(first);

    let restarted = engine(Some(dir.path().to_path_buf()));
    assert_eq!(restarted.session_ids().await, vec![id.clone()]);
    let second = router(restarted);
    let (_, after) = call(&second, Method::GET, &format!("/sessions/{id}/state"), None).await;
    assert_eq!(before, after);
    let (_, reply) = act(&second, &id, json!({ "action": "resolve_warning", "resolution": { "choice": "ignore" } })).await;
    assert_eq!(reply["revision"], 4);
    assert_eq!(reply["state"]["directives"][1]["status"]["status"], "overridden");
}

#[tokio::test]
async fn unreadable_snapshots_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.json"), "{\"version\": 9}").unwrap();
    let engine = Engine::open(scenarios(), Some(dir.path().to_path_buf()), SolveConfig::default()).unwrap();
    assert!(engine.session_ids().await.is_empty());
    assert!(dir.path().join("broken.json").exists(), "left for a person to inspect");
}
