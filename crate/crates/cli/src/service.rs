//! HTTP service for manual editing sessions, backed by an append-only
//! newline-delimited JSON store.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use anyhow::{Context, Result};
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tidyplan::eval::{episode_scene, held_out_templates};
use tidyplan::seed;
use tidyplan::session::{EditEvent, EditReplay, EditSessionLog, SessionTotals, TlxResponse};
use tidyplan::templates::builtin_library;
use tidyplan::{EnvironmentTag, Scene};

use crate::commands::ServeArgs;

pub const STORE_ENV: &str = "TIDYPLAN_STORE";

/// One line of the session store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StoreRecord {
    Create { session_id: String, scene_id: String, participant: String },
    Event { session_id: String, event: EditEvent },
    Finish { log: EditSessionLog },
}

#[derive(Debug)]
struct LiveSession {
    scene_id: String,
    participant: String,
    replay: EditReplay,
    events: Vec<EditEvent>,
    log: Option<EditSessionLog>,
}

#[derive(Debug)]
struct Inner {
    scenes: BTreeMap<String, Scene>,
    sessions: BTreeMap<String, LiveSession>,
    next_id: u64,
    store: Option<File>,
}

#[derive(Debug)]
pub struct AppState {
    inner: Mutex<Inner>,
}

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult = std::result::Result<Json<Value>, ApiError>;

fn not_found(what: &str, id: &str) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, format!("unknown {what} {id}"))
}

fn unprocessable(reason: impl ToString) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, reason.to_string())
}

fn internal(e: impl ToString) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

impl Inner {
    fn apply(&mut self, record: &StoreRecord) -> std::result::Result<(), ApiError> {
        match record {
            StoreRecord::Create { session_id, scene_id, participant } => {
                let scene = self.scenes.get(scene_id).ok_or_else(|| not_found("scene", scene_id))?;
                self.sessions.insert(
                    session_id.clone(),
                    LiveSession {
                        scene_id: scene_id.clone(),
                        participant: participant.clone(),
                        replay: EditReplay::new(scene.clone()),
                        events: Vec::new(),
                        log: None,
                    },
                );
                if let Some(n) = session_id.strip_prefix('s').and_then(|n| u64::from_str_radix(n, 16).ok()) {
                    self.next_id = self.next_id.max(n + 1);
                }
            }
            StoreRecord::Event { session_id, event } => {
                let s = self.sessions.get_mut(session_id).ok_or_else(|| not_found("session", session_id))?;
                if s.log.is_some() {
                    return Err(ApiError(StatusCode::CONFLICT, "session already finished".into()));
                }
                s.replay.apply(event).map_err(unprocessable)?;
                s.events.push(*event);
            }
            StoreRecord::Finish { log } => {
                let s = self.sessions.get_mut(&log.session_id).ok_or_else(|| not_found("session", &log.session_id))?;
                if s.log.is_some() {
                    return Err(ApiError(StatusCode::CONFLICT, "session already finished".into()));
                }
                s.log = Some(log.clone());
            }
        }
        Ok(())
    }

    /// Validates and applies `record`, then appends it to the store.
    fn commit(&mut self, record: StoreRecord) -> std::result::Result<(), ApiError> {
        self.apply(&record)?;
        if let Some(f) = &mut self.store {
            let mut line = serde_json::to_string(&record).map_err(internal)?;
            line.push('\n');
            f.write_all(line.as_bytes()).map_err(internal)?;
            f.sync_data().map_err(internal)?;
        }
        Ok(())
    }

    fn session(&self, id: &str) -> std::result::Result<&LiveSession, ApiError> {
        self.sessions.get(id).ok_or_else(|| not_found("session", id))
    }
}

impl AppState {
    /// Opens the service state, replaying any records already in `store`.
    pub fn open(scenes: BTreeMap<String, Scene>, store: Option<&Path>) -> Result<AppState> {
        let mut inner = Inner {
            scenes,
            sessions: BTreeMap::new(),
            next_id: 1,
            store: None,
        };
        if let Some(path) = store {
            if path.exists() {
                let text = fs::read(path)?;
                // a torn final line is the in-flight record of a crash: drop it
                let complete = text.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
                if complete < text.len() {
                    OpenOptions::new().write(true).open(path)?.set_len(complete as u64)?;
                }
                for (i, line) in BufReader::new(&text[..complete]).lines().enumerate() {
                    let record: StoreRecord = serde_json::from_str(&line?).with_context(|| format!("{}: record {}", path.display(), i + 1))?;
                    inner.apply(&record).map_err(|e| anyhow::anyhow!("{}: record {}: {}", path.display(), i + 1, e.1))?;
                }
            }
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            inner.store = Some(OpenOptions::new().create(true).append(true).open(path).with_context(|| format!("opening store {}", path.display()))?);
        }
        Ok(AppState { inner: Mutex::new(inner) })
    }
}

#[derive(Debug, Deserialize)]
struct CreateRequest {
    scene_id: String,
    #[serde(default)]
    participant: String,
}

fn parse<T: for<'de> Deserialize<'de>>(body: &str) -> std::result::Result<T, ApiError> {
    serde_json::from_str(body).map_err(unprocessable)
}

fn totals_json(s: &LiveSession) -> Value {
    json!({
        "scene": s.replay.scene,
        "selected": s.replay.selected,
        "totals": s.replay.totals,
        "events": s.events.len(),
        "finished": s.log.is_some(),
    })
}

async fn list_scenes(State(st): State<Arc<AppState>>) -> ApiResult {
    let inner = st.inner.lock().map_err(internal)?;
    let list: Vec<Value> = inner.scenes.iter().map(|(id, scene)| json!({ "id": id, "scene": scene })).collect();
    Ok(Json(Value::Array(list)))
}

async fn get_scene(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let inner = st.inner.lock().map_err(internal)?;
    let scene = inner.scenes.get(&id).ok_or_else(|| not_found("scene", &id))?;
    Ok(Json(serde_json::to_value(scene).map_err(internal)?))
}

async fn create_session(State(st): State<Arc<AppState>>, body: String) -> ApiResult {
    let req: CreateRequest = parse(&body)?;
    let mut inner = st.inner.lock().map_err(internal)?;
    let session_id = format!("s{:08x}", inner.next_id);
    inner.commit(StoreRecord::Create {
        session_id: session_id.clone(),
        scene_id: req.scene_id,
        participant: req.participant,
    })?;
    let s = inner.session(&session_id)?;
    Ok(Json(json!({ "session_id": session_id, "scene": s.replay.scene })))
}

async fn post_event(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: String) -> ApiResult {
    let mut inner = st.inner.lock().map_err(internal)?;
    inner.session(&id)?;
    let event: EditEvent = parse(&body)?;
    inner.commit(StoreRecord::Event { session_id: id.clone(), event })?;
    Ok(Json(totals_json(inner.session(&id)?)))
}

async fn finish(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: String) -> ApiResult {
    let mut inner = st.inner.lock().map_err(internal)?;
    let s = inner.session(&id)?;
    if s.log.is_some() {
        return Err(ApiError(StatusCode::CONFLICT, "session already finished".into()));
    }
    let tlx: TlxResponse = parse(&body)?;
    tlx.validate().map_err(unprocessable)?;
    let log = EditSessionLog {
        session_id: id.clone(),
        scene_id: s.scene_id.clone(),
        participant: s.participant.clone(),
        events: s.events.clone(),
        final_scene: s.replay.scene.clone(),
        tlx: Some(tlx),
    };
    inner.commit(StoreRecord::Finish { log: log.clone() })?;
    Ok(Json(serde_json::to_value(&log).map_err(internal)?))
}

async fn metrics(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let inner = st.inner.lock().map_err(internal)?;
    let s = inner.session(&id)?;
    let totals: SessionTotals = s.replay.totals;
    Ok(Json(json!({
        "session_id": id,
        "distance_cm": totals.distance_cm,
        "rotation_deg": totals.rotation_deg,
        "op_count": totals.op_count,
        "events": s.events.len(),
        "finished": s.log.is_some(),
    })))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/scenes", get(list_scenes))
        .route("/api/scene/{id}", get(get_scene))
        .route("/api/session", post(create_session))
        .route("/api/session/{id}/event", post(post_event))
        .route("/api/session/{id}/finish", post(finish))
        .route("/api/session/{id}/metrics", get(metrics))
        .with_state(state)
}

/// One messy held-out scene per environment, ids like `coffee-0`.
pub fn default_scenes() -> Result<BTreeMap<String, Scene>> {
    let held = held_out_templates(&builtin_library(), 0)?;
    let mut out = BTreeMap::new();
    for (i, env) in EnvironmentTag::ALL.into_iter().enumerate() {
        let (scene, _) = episode_scene(&held, env, 4, seed::derive(0, &[i as u64]))?;
        out.insert(format!("{}-0", env.name()), scene);
    }
    Ok(out)
}

pub fn load_scenes(dir: &Path) -> Result<BTreeMap<String, Scene>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let scene = Scene::from_json(&fs::read_to_string(&path)?).with_context(|| format!("loading {}", path.display()))?;
        out.insert(id, scene);
    }
    Ok(out)
}

pub fn store_path(flag: &Path) -> PathBuf {
    std::env::var_os(STORE_ENV).map(PathBuf::from).unwrap_or_else(|| flag.to_path_buf())
}

pub fn serve(a: &ServeArgs) -> Result<()> {
    let scenes = match &a.scenes {
        Some(dir) => load_scenes(dir)?,
        None => default_scenes()?,
    };
    let store = store_path(&a.store);
    let state = Arc::new(AppState::open(scenes, Some(&store))?);
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", a.port)).await?;
        eprintln!("listening on {} (store {})", listener.local_addr()?, store.display());
        axum::serve(listener, router(state)).await?;
        Ok(())
    })
}
