//! The session API driven in-process by a scripted headless client.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use resqu_cli::args::Cli;
use resqu_cli::service::{router, AppState, ServiceConfig};
use resqu_core::empirics::parse_log;
use resqu_core::sdt::PayoffMatrix;
use resqu_core::simulator::Experiment;
use resqu_core::types::TrueState;
use serde_json::{json, Value};
use tower::ServiceExt;

fn config(seed: u64) -> ServiceConfig {
    ServiceConfig {
        seed: Some(seed),
        ..ServiceConfig::preset(Experiment::Exp2)
    }
}

fn app(dir: &Path, seed: u64) -> Router {
    router(AppState::open(config(seed), dir).unwrap())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn create(app: &Router, participant: &str) -> (String, Value) {
    let (status, body) = call(app, "POST", "/api/sessions", Some(json!({ "participant_id": participant }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    (body["session_id"].as_str().unwrap().to_string(), body["plan"].clone())
}

/// Scripted participant: rejects tall rectangles, with a lower bar after a
/// red indicator.
fn choose(stimulus: &Value) -> &'static str {
    let height = stimulus["height_px"].as_u64().unwrap();
    let bar = if stimulus["indicator"] == "red" { 280 } else { 380 };
    if height > bar {
        "reject"
    } else {
        "accept"
    }
}

/// Answers one trial and returns the stimulus and the reply.
async fn answer(app: &Router, id: &str) -> (Value, Value) {
    let (status, stimulus) = call(app, "GET", &format!("/api/sessions/{id}/next"), None).await;
    assert_eq!(status, StatusCode::OK, "{stimulus}");
    let body = json!({
        "trial_index": stimulus["trial_index"],
        "response": choose(&stimulus),
        "rt_ms": 850,
    });
    let (status, reply) = call(app, "POST", &format!("/api/sessions/{id}/responses"), Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{reply}");
    (stimulus, reply)
}

fn questionnaire(v: u8) -> Value {
    json!({ "q1": v, "q2": v, "q3": v, "q4": v, "q5": v, "q6": v })
}

#[tokio::test]
async fn full_session_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let app = app(tmp.path(), 11);
    let (id, plan) = create(&app, "p-001").await;
    assert_eq!(plan["conditions"].as_array().unwrap().len(), 2);
    assert_eq!(plan["trials_per_condition"], 100);
    assert!(plan.get("key").is_none());

    let mut total = 0;
    for condition in 0..2u64 {
        for i in 0..100u64 {
            let (stimulus, reply) = answer(&app, &id).await;
            let keys: BTreeSet<&str> = stimulus.as_object().unwrap().keys().map(String::as_str).collect();
            assert_eq!(keys, BTreeSet::from(["block", "height_px", "indicator", "position", "trial_index"]));
            assert_eq!(stimulus["trial_index"], condition * 100 + i);
            assert_eq!(stimulus["block"], i / 50 + 1);

            let correct = reply["correct"].as_bool().unwrap();
            assert_eq!(reply["feedback"], if correct { "correct" } else { "incorrect" });
            let payoff = reply["payoff"].as_i64().unwrap();
            assert!([1, -1, -2].contains(&payoff));
            assert_eq!(correct, payoff == 1);
            assert_eq!(reply["delta"], payoff);
            total += payoff;
            assert_eq!(reply["total"], total);
        }
        let next = format!("/api/sessions/{id}/next");
        assert_eq!(call(&app, "GET", &next, None).await.0, StatusCode::CONFLICT);
        let early = json!({ "trial_index": (condition + 1) * 100, "response": "accept" });
        let uri = format!("/api/sessions/{id}/responses");
        assert_eq!(call(&app, "POST", &uri, Some(early)).await.0, StatusCode::CONFLICT);

        let uri = format!("/api/sessions/{id}/questionnaire");
        assert_eq!(call(&app, "POST", &uri, Some(questionnaire(9))).await.0, StatusCode::UNPROCESSABLE_ENTITY);
        let (status, reply) = call(&app, "POST", &uri, Some(questionnaire(3 + condition as u8))).await;
        assert_eq!(status, StatusCode::OK, "{reply}");
        assert_eq!(reply["complete"], condition == 1);
    }
    assert_eq!(call(&app, "GET", &format!("/api/sessions/{id}/next"), None).await.0, StatusCode::GONE);
    let uri = format!("/api/sessions/{id}/questionnaire");
    assert_eq!(call(&app, "POST", &uri, Some(questionnaire(4))).await.0, StatusCode::CONFLICT);

    let (status, report) = call(&app, "GET", &format!("/api/sessions/{id}/report"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["complete"], true);
    assert_eq!(report["total_score"], total);
    assert_eq!(report["trials_answered"], 200);
    let conditions = report["conditions"].as_array().unwrap();
    assert_eq!(
        conditions.iter().map(|c| c["total_score"].as_i64().unwrap()).sum::<i64>(),
        total
    );
    assert_eq!(conditions[1]["questionnaire"]["q1"], 4);

    // The logs parse, keep the block composition and feed `analyze`.
    let dir = tmp.path().join("sessions").join(&id);
    let log = dir.join("trials.jsonl");
    let records = parse_log(fs::read(&log).unwrap().as_slice(), &PayoffMatrix::quality_control()).unwrap();
    assert_eq!(records.len(), 200);
    assert_eq!(records.iter().map(|r| r.payoff).sum::<i64>(), total);
    for chunk in records.chunks(50) {
        assert!(chunk.iter().all(|r| r.block == chunk[0].block && r.condition_id == chunk[0].condition_id));
        assert_eq!(chunk.iter().filter(|r| r.true_state == TrueState::Signal).count(), 20);
        assert!(chunk.iter().all(|r| r.rt_ms == Some(850)));
    }

    let answers = dir.join("questionnaires.jsonl");
    let argv = [
        "resqu",
        "analyze",
        "--log",
        log.to_str().unwrap(),
        "--theory",
        "--questionnaire",
        answers.to_str().unwrap(),
    ];
    let cli = <Cli as clap::Parser>::try_parse_from(argv).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    resqu_cli::run(cli, &mut out, &mut err).unwrap();
    let analysis: Value = serde_json::from_slice(&out).unwrap();
    let ids: Vec<String> = plan["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["condition_id"].as_str().unwrap().to_string())
        .collect();
    for id in &ids {
        let c = &analysis["conditions"][id];
        assert_eq!(c["report"]["trial_count"], 50, "{c}");
        assert!(c["theory"]["responsibility"].is_number());
        assert!(c["deviations"].is_object());
    }
    assert_eq!(analysis["comparison"].as_array().unwrap().len(), 2);
    assert_eq!(analysis["subjective"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn restart_resumes_at_first_unanswered_trial() {
    let tmp = tempfile::tempdir().unwrap();
    let first = app(tmp.path(), 3);
    let (id, _) = create(&first, "p-crash").await;
    let mut total = 0;
    for _ in 0..37 {
        total += answer(&first, &id).await.1["payoff"].as_i64().unwrap();
    }
    let (_, pending) = call(&first, "GET", &format!("/api/sessions/{id}/next"), None).await;
    drop(first);

    // A crash in the middle of an append leaves a partial line behind.
    let log = tmp.path().join("sessions").join(&id).join("trials.jsonl");
    let mut text = fs::read_to_string(&log).unwrap();
    text.push_str("{\"session_id\":\"");
    fs::write(&log, text).unwrap();

    let second = app(tmp.path(), 3);
    let (status, resumed) = call(&second, "GET", &format!("/api/sessions/{id}/next"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(resumed, pending);
    assert_eq!(resumed["trial_index"], 37);

    let uri = format!("/api/sessions/{id}/responses");
    let stale = json!({ "trial_index": 36, "response": "reject" });
    assert_eq!(call(&second, "POST", &uri, Some(stale)).await.0, StatusCode::CONFLICT);
    let (_, reply) = answer(&second, &id).await;
    assert_eq!(reply["total"], total + reply["payoff"].as_i64().unwrap());

    let records = parse_log(fs::read(&log).unwrap().as_slice(), &PayoffMatrix::quality_control()).unwrap();
    assert_eq!(records.len(), 38);
    assert_eq!(records.iter().map(|r| r.trial_index).collect::<Vec<_>>(), (0..38).collect::<Vec<_>>());
}

#[tokio::test]
async fn unknown_sessions_and_double_answers() {
    let tmp = tempfile::tempdir().unwrap();
    let app = app(tmp.path(), 5);
    for (method, path, body) in [
        ("GET", "next", None),
        ("GET", "report", None),
        ("POST", "responses", Some(json!({ "trial_index": 0, "response": "accept" }))),
        ("POST", "questionnaire", Some(questionnaire(4))),
    ] {
        let (status, body) = call(&app, method, &format!("/api/sessions/nope/{path}"), body).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{path}");
        assert!(body["error"].as_str().unwrap().contains("nope"));
    }

    let (id, _) = create(&app, "p-dup").await;
    let uri = format!("/api/sessions/{id}/responses");
    let ahead = json!({ "trial_index": 3, "response": "accept" });
    assert_eq!(call(&app, "POST", &uri, Some(ahead)).await.0, StatusCode::CONFLICT);
    answer(&app, &id).await;
    let again = json!({ "trial_index": 0, "response": "reject" });
    let (status, body) = call(&app, "POST", &uri, Some(again)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("already answered"));
    let uri = format!("/api/sessions/{id}/questionnaire");
    assert_eq!(call(&app, "POST", &uri, Some(questionnaire(4))).await.0, StatusCode::CONFLICT);

    let blank = call(&app, "POST", "/api/sessions", Some(json!({ "participant_id": " " }))).await;
    assert_eq!(blank.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn orders_alternate_and_seeded_services_agree() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (app_a, app_b) = (app(a.path(), 21), app(b.path(), 21));
    let mut orders = Vec::new();
    for k in 0..4 {
        let (id_a, plan) = create(&app_a, &format!("p{k}")).await;
        let (id_b, _) = create(&app_b, &format!("p{k}")).await;
        orders.push(plan["order"].as_u64().unwrap());
        let (sa, _) = answer(&app_a, &id_a).await;
        let (sb, _) = answer(&app_b, &id_b).await;
        assert_eq!(sa, sb);
    }
    assert_eq!(orders, [0, 1, 0, 1]);

    // Counting resumes after a restart.
    let app_a = app(a.path(), 21);
    assert_eq!(create(&app_a, "p4").await.1["order"], 0);
}

#[tokio::test]
async fn iid_schedule_from_toml() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("service.toml");
    fs::write(
        &path,
        r#"
        seed = 1
        [schedule]
        kind = "iid"
        blocks = 1
        trials_per_block = 3
        [[orders]]
        conditions = [{ d_h = 2.3, d_a = 1.0, beta_a = 1.0 }]
        "#,
    )
    .unwrap();
    let config = ServiceConfig::load(&path).unwrap();
    let app = router(AppState::open(config, &tmp.path().join("data")).unwrap());
    let (id, plan) = create(&app, "p").await;
    assert_eq!(plan["conditions"][0]["condition_id"], "dh2.3-da1-ba1");
    for _ in 0..3 {
        answer(&app, &id).await;
    }
    let uri = format!("/api/sessions/{id}/questionnaire");
    let (status, reply) = call(&app, "POST", &uri, Some(questionnaire(5))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(reply["complete"], true);
    let (_, report) = call(&app, "GET", &format!("/api/sessions/{id}/report"), None).await;
    assert_eq!(report["conditions"][0]["trials"], 3);
    assert!(report["conditions"][0]["measures"].is_null());
}
