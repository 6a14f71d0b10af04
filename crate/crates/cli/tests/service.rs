use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use tidyplan::session::{recount_session, replay, EditEvent, EditOp, EditSessionLog};
use tidyplan::{Category, EnvironmentTag, ObjectInstance, Pose, Scene, Workspace};
use tidyplan_cli::service::{default_scenes, router, AppState, StoreRecord};

fn scenes() -> BTreeMap<String, Scene> {
    let scene = Scene::new(
        Workspace::default(),
        EnvironmentTag::Coffee,
        vec![
            ObjectInstance::from_category(0, Category::Cup, Pose::new(0.3, 0.3, 0.0)),
            ObjectInstance::from_category(1, Category::Book, Pose::new(0.7, 0.4, 30.0)),
        ],
    )
    .unwrap();
    BTreeMap::from([("desk".to_string(), scene)])
}

struct Client {
    state: Arc<AppState>,
    rt: tokio::runtime::Runtime,
}

impl Client {
    fn new(state: AppState) -> Client {
        Client {
            state: Arc::new(state),
            rt: tokio::runtime::Builder::new_current_thread().build().unwrap(),
        }
    }

    fn call(&self, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Value) {
        let req = Request::builder().method(method).uri(uri).header("content-type", "application/json").body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
        let app = router(self.state.clone());
        self.rt.block_on(async move {
            let resp = app.oneshot(req).await.unwrap();
            let status = resp.status();
            let bytes = resp.into_body().collect().await.unwrap().to_bytes();
            (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
        })
    }

    fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.call("GET", uri, None)
    }

    fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.call("POST", uri, Some(body.to_string()))
    }

    fn create(&self) -> String {
        let (st, v) = self.post("/api/session", json!({"scene_id": "desk", "participant": "p1"}));
        assert_eq!(st, StatusCode::OK, "{v}");
        v["session_id"].as_str().unwrap().to_string()
    }

    fn event(&self, sid: &str, op: &str, object_id: u32) -> (StatusCode, Value) {
        self.post(&format!("/api/session/{sid}/event"), json!({"op": op, "object_id": object_id, "timestamp": 0}))
    }
}

fn tlx() -> Value {
    json!({"mental_demand": 5, "performance": 15, "frustration": 2})
}

/// Select the book, 12 moves and 3 rotations.
fn script(c: &Client, sid: &str) -> Value {
    assert_eq!(c.event(sid, "select", 1).0, StatusCode::OK);
    let moves = ["move-up", "move-right", "move-down", "move-left"];
    let mut last = Value::Null;
    for i in 0..12 {
        last = c.event(sid, moves[i % 4], 1).1;
    }
    for op in ["rotate-cw", "rotate-cw", "rotate-ccw"] {
        last = c.event(sid, op, 1).1;
    }
    last
}

#[test]
fn scenes_are_listed_and_fetched() {
    let c = Client::new(AppState::open(scenes(), None).unwrap());
    let (st, v) = c.get("/api/scenes");
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v[0]["id"], "desk");
    let (st, v) = c.get("/api/scene/desk");
    assert_eq!(st, StatusCode::OK);
    assert_eq!(serde_json::from_value::<Scene>(v).unwrap(), scenes()["desk"]);
    assert_eq!(c.get("/api/scene/nope").0, StatusCode::NOT_FOUND);
    assert_eq!(c.post("/api/session", json!({"scene_id": "nope"})).0, StatusCode::NOT_FOUND);
}

#[test]
fn twelve_moves_three_rotations_round_trip() {
    let c = Client::new(AppState::open(scenes(), None).unwrap());
    let sid = c.create();
    let last = script(&c, &sid);
    assert_eq!(last["totals"], json!({"distance_cm": 12.0, "rotation_deg": 30.0, "op_count": 15}));
    let (st, log) = c.post(&format!("/api/session/{sid}/finish"), tlx());
    assert_eq!(st, StatusCode::OK);
    let log: EditSessionLog = serde_json::from_value(log).unwrap();
    assert_eq!(log.events.len(), 16);
    let (_, m) = c.get(&format!("/api/session/{sid}/metrics"));
    assert_eq!((m["distance_cm"].as_f64(), m["rotation_deg"].as_f64(), m["op_count"].as_u64()), (Some(12.0), Some(30.0), Some(15)));
    assert_eq!(m["finished"], true);
    let totals = recount_session(&log).unwrap();
    assert_eq!((totals.distance_cm, totals.rotation_deg, totals.op_count as u64), (12.0, 30.0, 15));
    // the served scene is the replay of the events on the initial scene
    assert_eq!(replay(&scenes()["desk"], &log.events).unwrap().scene, log.final_scene);
}

#[test]
fn error_statuses() {
    let c = Client::new(AppState::open(scenes(), None).unwrap());
    assert_eq!(c.event("s999", "select", 0).0, StatusCode::NOT_FOUND);
    assert_eq!(c.post("/api/session/s999/finish", tlx()).0, StatusCode::NOT_FOUND);
    assert_eq!(c.get("/api/session/s999/metrics").0, StatusCode::NOT_FOUND);

    let sid = c.create();
    let (st, v) = c.event(&sid, "move-up", 0);
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["error"].as_str().unwrap().contains("not selected"));
    assert_eq!(c.event(&sid, "select", 7).0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(c.event(&sid, "jump", 0).0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(c.call("POST", &format!("/api/session/{sid}/event"), Some("{not json".into())).0, StatusCode::UNPROCESSABLE_ENTITY);
    // rejected events are not recorded
    assert_eq!(c.get(&format!("/api/session/{sid}/metrics")).1["events"], 0);

    assert_eq!(c.post(&format!("/api/session/{sid}/finish"), json!({"mental_demand": 21, "performance": 0, "frustration": 0})).0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(c.post(&format!("/api/session/{sid}/finish"), tlx()).0, StatusCode::OK);
    assert_eq!(c.post(&format!("/api/session/{sid}/finish"), tlx()).0, StatusCode::CONFLICT);
    assert_eq!(c.event(&sid, "select", 0).0, StatusCode::CONFLICT);
}

#[test]
fn store_replay_restores_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("sessions.ndjson");
    let (sid, open_sid, metrics, open_metrics) = {
        let c = Client::new(AppState::open(scenes(), Some(&store)).unwrap());
        let sid = c.create();
        script(&c, &sid);
        c.post(&format!("/api/session/{sid}/finish"), tlx());
        let open_sid = c.create();
        c.event(&open_sid, "select", 0);
        c.event(&open_sid, "move-left", 0);
        let m = c.get(&format!("/api/session/{sid}/metrics")).1;
        let om = c.get(&format!("/api/session/{open_sid}/metrics")).1;
        (sid, open_sid, m, om)
    };
    assert_ne!(sid, open_sid);

    // simulate a crash in the middle of writing a record
    std::fs::OpenOptions::new().append(true).open(&store).unwrap().write_all(b"{\"kind\":\"event\",\"sess").unwrap();

    let c = Client::new(AppState::open(scenes(), Some(&store)).unwrap());
    assert_eq!(c.get(&format!("/api/session/{sid}/metrics")).1, metrics);
    assert_eq!(c.get(&format!("/api/session/{open_sid}/metrics")).1, open_metrics);
    assert_eq!(c.post(&format!("/api/session/{sid}/finish"), tlx()).0, StatusCode::CONFLICT);
    // the open session keeps accepting events and ids keep increasing
    assert_eq!(c.event(&open_sid, "move-left", 0).0, StatusCode::OK);
    let third = c.create();
    assert!(third > open_sid);
    let after = c.get(&format!("/api/session/{open_sid}/metrics")).1;
    drop(c);
    let c = Client::new(AppState::open(scenes(), Some(&store)).unwrap());
    assert_eq!(c.get(&format!("/api/session/{open_sid}/metrics")).1, after);
    assert_eq!(after["events"], 3);

    let text = std::fs::read_to_string(&store).unwrap();
    let records: Vec<StoreRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let log = records
        .iter()
        .find_map(|r| match r {
            StoreRecord::Finish { log } if log.session_id == sid => Some(log.clone()),
            _ => None,
        })
        .unwrap();
    let t = recount_session(&log).unwrap();
    assert_eq!(json!(t.distance_cm), metrics["distance_cm"]);
    assert_eq!(json!(t.op_count), metrics["op_count"]);
    let events: Vec<EditEvent> = records
        .iter()
        .filter_map(|r| match r {
            StoreRecord::Event { session_id, event } if *session_id == sid => Some(*event),
            _ => None,
        })
        .collect();
    assert_eq!(events, log.events);
    assert_eq!(replay(&scenes()["desk"], &events).unwrap().scene, log.final_scene);
    assert!(events.iter().any(|e| e.op == EditOp::RotateCcw));
}

#[test]
fn default_scene_set_covers_every_environment() {
    let s = default_scenes().unwrap();
    assert_eq!(s.len(), EnvironmentTag::ALL.len());
    for env in EnvironmentTag::ALL {
        let scene = &s[&format!("{}-0", env.name())];
        assert_eq!(scene.environment_tag, env);
        assert!(scene.is_valid());
    }
}
