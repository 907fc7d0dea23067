use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use hdm_core::agents::{action_set, render_action, PolicySnapshot};
use hdm_core::domain::{DialogueAct, Intent, SlotName, Speaker, UserGoal};
use hdm_core::goals::generate_goal_corpus;
use hdm_core::kb::{default_city_pool, generate_kb, Kb};
use hdm_core::qnet::{Mlp, QNetwork};
use hdm_core::tracker::{DialogueState, FEATURE_WIDTH};
use hdm_server::store::{read_records, Record, Store};
use hdm_server::templates::{Shape, TemplateTable};
use hdm_server::{replay, router, AppState, CreateResponse, ServiceConfig, TranscriptResponse};
use http_body_util::BodyExt;
use proptest::prelude::*;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture() -> (Kb, Vec<UserGoal>) {
    let kb = generate_kb(11, 80, 40, &default_city_pool(), 1.0).unwrap();
    let goals = generate_goal_corpus(5, [1.0, 0.0, 0.0], &kb, 3).unwrap();
    (kb, goals)
}

/// A flat policy whose Q-values are all zero: always the first action.
fn stubborn() -> PolicySnapshot {
    let net = Mlp::zeros(FEATURE_WIDTH, 4, action_set().len()).unwrap();
    PolicySnapshot::Flat(QNetwork::from_parts(net.clone(), net, 1e-3, 1.0))
}

struct Harness {
    app: Router,
    kb: Kb,
    goals: Vec<UserGoal>,
    _dir: tempfile::TempDir,
    log: std::path::PathBuf,
}

fn harness() -> Harness {
    let (kb, goals) = fixture();
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("sessions.jsonl");
    let mut agents = BTreeMap::new();
    agents.insert("rule".to_string(), PolicySnapshot::Rule);
    agents.insert("stubborn".to_string(), stubborn());
    let state = AppState::new(
        agents,
        kb.clone(),
        goals.clone(),
        Store::open(&log).unwrap(),
        ServiceConfig::default(),
    );
    Harness {
        app: router(Arc::new(state)),
        kb,
        goals,
        _dir: dir,
        log,
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(match body {
            Some(v) => Body::from(v.to_string()),
            None => Body::empty(),
        })
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn open(app: &Router, agent: &str, goal: usize) -> CreateResponse {
    let (status, body) = call(app, "POST", "/sessions", Some(json!({"agent": agent, "goal": goal}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    serde_json::from_value(body).unwrap()
}

fn user(intent: Intent, slots: &[(SlotName, &str)]) -> Value {
    let mut act = DialogueAct::new(Speaker::User, intent);
    for (s, v) in slots {
        act = act.with_slot(*s, *v);
    }
    serde_json::to_value(act).unwrap()
}

#[tokio::test]
async fn create_sessions() {
    let h = harness();
    let a = open(&h.app, "rule", 0).await;
    let b = open(&h.app, "rule", 1).await;
    assert_ne!(a.session_id, b.session_id);
    assert_eq!(a.goal, h.goals[0]);
    assert!(!a.opening.is_empty());
    assert_eq!(a.card.informs.len(), h.goals[0].inform.len());

    let (status, body) = call(&h.app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::OK, "random agent and goal");
    assert!(["rule", "stubborn"].contains(&body["agent"].as_str().unwrap()));

    let (status, body) = call(&h.app, "POST", "/sessions", Some(json!({"agent": "oracle"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "UnknownAgent");
    assert!(body["error"].as_str().unwrap().contains("oracle"));

    let (status, body) = call(&h.app, "POST", "/sessions", Some(json!({"goal": 99}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "OutOfRange");
}

#[tokio::test]
async fn act_exchange_and_errors() {
    let h = harness();
    let s = open(&h.app, "rule", 0).await;
    let uri = format!("/sessions/{}/acts", s.session_id);
    let goal = &h.goals[0];
    let v = |slot| goal.inform[&slot][0].as_str();
    let first = user(
        Intent::Inform,
        &[
            (SlotName::OrCity, v(SlotName::OrCity)),
            (SlotName::DstCity, v(SlotName::DstCity)),
            (SlotName::DepartDateDep, v(SlotName::DepartDateDep)),
        ],
    );
    let (status, body) = call(&h.app, "POST", &uri, Some(first)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let act: DialogueAct = serde_json::from_value(body["agent_act"].clone()).unwrap();
    assert_eq!(act.speaker, Speaker::Agent);
    act.validate().unwrap();
    assert!(!body["text"].as_str().unwrap().is_empty());
    assert_eq!(body["done"], false);

    let (status, body) = call(&h.app, "POST", &uri, Some(json!({"speaker": "user", "intent": "dance"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "ParseError");
    let agent_act = json!({"speaker": "agent", "intent": "thanks", "slots": {}});
    let (status, _) = call(&h.app, "POST", &uri, Some(agent_act)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let bad_date = user(Intent::Inform, &[(SlotName::DepartDateDep, "the 40th")]);
    let (status, _) = call(&h.app, "POST", &uri, Some(bad_date)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, body) = call(&h.app, "POST", "/sessions/nope/acts", Some(user(Intent::Thanks, &[]))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "SessionNotFound");

    let (status, body) = call(&h.app, "POST", &uri, Some(user(Intent::Closing, &[]))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["done"], true);
    let (status, body) = call(&h.app, "POST", &uri, Some(user(Intent::Thanks, &[]))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "SessionClosed");
}

#[tokio::test]
async fn turn_limit_closes_the_session() {
    let h = harness();
    let s = open(&h.app, "stubborn", 0).await;
    let uri = format!("/sessions/{}/acts", s.session_id);
    for turn in 1..=60 {
        let (status, body) = call(&h.app, "POST", &uri, Some(user(Intent::Deny, &[]))).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["done"], turn == 60, "turn {turn}");
    }
    let (status, _) = call(&h.app, "POST", &uri, Some(user(Intent::Deny, &[]))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn rating_rules_and_persistence() {
    let h = harness();
    let s = open(&h.app, "rule", 2).await;
    let id = &s.session_id;
    let rating = format!("/sessions/{id}/rating");
    let (status, body) = call(&h.app, "POST", &rating, Some(json!({"rating": 4}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "SessionOpen");

    let acts = format!("/sessions/{id}/acts");
    call(&h.app, "POST", &acts, Some(user(Intent::Request, &[(SlotName::Price, "")]))).await;
    call(&h.app, "POST", &acts, Some(user(Intent::Closing, &[]))).await;

    for bad in [0, 6, -1] {
        let (status, body) = call(&h.app, "POST", &rating, Some(json!({"rating": bad}))).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "rating {bad}");
        assert_eq!(body["code"], "OutOfRange");
    }
    let (status, _) = call(&h.app, "POST", &rating, Some(json!({"stars": 3}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, body) = call(&h.app, "POST", &rating, Some(json!({"rating": 4}))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, body) = call(&h.app, "POST", &rating, Some(json!({"rating": 5}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "AlreadyRated");

    let (_, t) = call(&h.app, "GET", &format!("/sessions/{id}/transcript"), None).await;
    let t: TranscriptResponse = serde_json::from_value(t).unwrap();
    assert_eq!(t.rating, Some(4));
    assert_eq!(t.turns.len(), 4);

    let records = read_records(&h.log).unwrap();
    let mine = |r: &&Record| match r {
        Record::Created { session_id, .. }
        | Record::Turn { session_id, .. }
        | Record::Closed { session_id, .. }
        | Record::Rated { session_id, .. } => session_id == id,
    };
    let kinds: Vec<&str> = records
        .iter()
        .filter(mine)
        .map(|r| match r {
            Record::Created { .. } => "created",
            Record::Turn { .. } => "turn",
            Record::Closed { .. } => "closed",
            Record::Rated { .. } => "rated",
        })
        .collect();
    assert_eq!(kinds, ["created", "turn", "turn", "turn", "turn", "closed", "rated"]);
    match records.iter().rfind(|r| mine(r)).unwrap() {
        Record::Rated { rating, transcript, .. } => {
            assert_eq!(*rating, 4);
            assert_eq!(transcript, &t.turns);
        }
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn transcript_replay_reproduces_state() {
    let h = harness();
    let s = open(&h.app, "rule", 1).await;
    let uri = format!("/sessions/{}/acts", s.session_id);
    let goal = &h.goals[1];
    for (slot, values) in &goal.inform {
        let (_, body) = call(&h.app, "POST", &uri, Some(user(Intent::Inform, &[(*slot, &values[0])]))).await;
        if body["done"] == true {
            break;
        }
    }
    let (_, t) = call(&h.app, "GET", &format!("/sessions/{}/transcript", s.session_id), None).await;
    let t: TranscriptResponse = serde_json::from_value(t).unwrap();
    let speakers: Vec<Speaker> = t.turns.iter().map(|e| e.speaker).collect();
    for pair in speakers.chunks(2) {
        assert_eq!(pair, [Speaker::User, Speaker::Agent]);
    }
    let replayed = replay(&t.turns, &h.kb, 60).unwrap();
    assert_eq!(serde_json::to_value(&replayed).unwrap(), t.state);
}

#[test]
fn every_agent_act_has_a_template() {
    let (kb, goals) = fixture();
    let table = TemplateTable::default();
    let mut states = vec![DialogueState::new(&kb, 60)];
    let mut s = DialogueState::new(&kb, 60);
    for (slot, values) in &goals[0].inform {
        s.apply(&DialogueAct::inform(Speaker::User, *slot, &values[0]), &kb).unwrap();
    }
    states.push(s);
    for state in &states {
        for &action in action_set() {
            let act = render_action(action, state, &kb);
            let shape = Shape::of(&act);
            assert!(table.get(Speaker::Agent, act.intent, shape).is_some(), "{act:?}");
            let text = table.render(&act);
            assert!(!text.is_empty() && !text.contains('{'), "{text}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Interleaved requests from two sessions end in the same states as
    /// running each session alone.
    #[test]
    fn sessions_are_isolated(
        script_a in prop::collection::vec(0usize..6, 1..8),
        script_b in prop::collection::vec(0usize..6, 1..8),
        order in prop::collection::vec(any::<bool>(), 16),
    ) {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async {
            let h = harness();
            let goal = &h.goals[0];
            let acts: Vec<Value> = goal
                .inform
                .iter()
                .map(|(s, v)| user(Intent::Inform, &[(*s, v[0].as_str())]))
                .chain([user(Intent::Request, &[(SlotName::Price, "")])])
                .collect();
            let pick = |i: usize| acts[i % acts.len()].clone();

            let solo = |script: Vec<usize>| {
                let h = harness();
                let pick = &pick;
                async move {
                    let s = open(&h.app, "rule", 0).await;
                    let uri = format!("/sessions/{}/acts", s.session_id);
                    for &i in &script {
                        call(&h.app, "POST", &uri, Some(pick(i))).await;
                    }
                    let (_, t) = call(&h.app, "GET", &format!("/sessions/{}/transcript", s.session_id), None).await;
                    t["state"].clone()
                }
            };
            let want_a = solo(script_a.clone()).await;
            let want_b = solo(script_b.clone()).await;

            let a = open(&h.app, "rule", 0).await.session_id;
            let b = open(&h.app, "rule", 0).await.session_id;
            let (mut ia, mut ib) = (0, 0);
            let mut k = 0;
            while ia < script_a.len() || ib < script_b.len() {
                let take_a = ib >= script_b.len() || (ia < script_a.len() && order[k % order.len()]);
                k += 1;
                let (id, act) = if take_a {
                    ia += 1;
                    (&a, pick(script_a[ia - 1]))
                } else {
                    ib += 1;
                    (&b, pick(script_b[ib - 1]))
                };
                let app = h.app.clone();
                let uri = format!("/sessions/{id}/acts");
                let other = tokio::spawn(async move { call(&app, "POST", &uri, Some(act)).await });
                let peek = if take_a { &b } else { &a };
                call(&h.app, "GET", &format!("/sessions/{peek}/transcript"), None).await;
                other.await.unwrap();
            }
            let (_, ta) = call(&h.app, "GET", &format!("/sessions/{a}/transcript"), None).await;
            let (_, tb) = call(&h.app, "GET", &format!("/sessions/{b}/transcript"), None).await;
            assert_eq!(ta["state"], want_a);
            assert_eq!(tb["state"], want_b);
        });
    }
}
