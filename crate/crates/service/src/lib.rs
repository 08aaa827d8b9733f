//! HTTP and WebSocket host for interactive sessions.
//!
//! Every session lives in its own actor task. HTTP handlers and stream
//! connections talk to it through a command queue; per-tick `pose_update`
//! and `sample_batch` messages fan out to all subscribers in the same
//! order.
//!
//! | Method | Path | |
//! |---|---|---|
//! | POST | `/sessions` | create from a session config |
//! | GET | `/sessions` | list |
//! | GET, DELETE | `/sessions/{id}` | inspect, delete |
//! | POST | `/sessions/{id}/sensors` | add a sensor |
//! | PATCH, DELETE | `/sessions/{id}/sensors/{sensor}` | move, remove |
//! | POST | `/sessions/{id}/prefabs` | add a matrix prefab |
//! | POST | `/sessions/{id}/transport` | play, pause, edit, seek, speed |
//! | GET | `/sessions/{id}/export` | zip of CSV + metadata per sensor |
//! | GET | `/sessions/{id}/stream` | WebSocket |

mod actor;
mod error;
pub mod protocol;

use std::collections::BTreeMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tokio::sync::{broadcast, RwLock};
use vsens_core::sensors::{MatrixPrefabSpec, SensorDef};
use vsens_core::simulation::{parse_config, Session};

use actor::{ack_payload, Command, SessionHandle};
pub use error::ApiError;
pub use protocol::{
    ClientCommand, ClientMessage, MoveSensorRequest, PlaybackState, SessionInfo, TransportCommand,
    STREAM_SCHEMA,
};

/// Close code sent to stream clients when their session is deleted.
pub const CLOSE_SESSION_DELETED: u16 = 4000;

/// Shared server state.
pub struct AppState {
    sessions: RwLock<BTreeMap<String, SessionHandle>>,
    base_dir: PathBuf,
}

impl AppState {
    /// Relative clip and mesh paths in session configs resolve against
    /// `base_dir`.
    pub fn new(base_dir: impl Into<PathBuf>) -> Arc<Self> {
        Arc::new(AppState {
            sessions: RwLock::new(BTreeMap::new()),
            base_dir: base_dir.into(),
        })
    }

    async fn get(&self, id: &str) -> Result<SessionHandle, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_string()))
    }

    pub async fn session_count(&self) -> usize {
        self.sessions.read().await.len()
    }

    /// Stops every session, closing all streams.
    pub async fn shutdown_all(&self) {
        let sessions = std::mem::take(&mut *self.sessions.write().await);
        for handle in sessions.values() {
            handle.shutdown().await;
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/sensors", post(add_sensor))
        .route(
            "/sessions/{id}/sensors/{sensor}",
            patch(move_sensor).delete(remove_sensor),
        )
        .route("/sessions/{id}/prefabs", post(add_prefab))
        .route("/sessions/{id}/transport", post(transport))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(state)
}

/// Serves until `shutdown` resolves, then closes all sessions and lets
/// in-flight requests finish.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(state.clone());
    let signal = async move {
        shutdown.await;
        state.shutdown_all().await;
    };
    axum::serve(listener, app)
        .with_graceful_shutdown(signal)
        .await
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid body: {e}")))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let text =
        std::str::from_utf8(&body).map_err(|_| ApiError::BadRequest("body is not UTF-8".into()))?;
    let config = parse_config(text).map_err(ApiError::Validation)?;
    let base = state.base_dir.clone();
    let session = tokio::task::spawn_blocking(move || Session::new(config, &base))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(ApiError::Validation)?;
    let id = uuid::Uuid::new_v4().to_string();
    let handle = SessionHandle::spawn(id.clone(), session);
    state
        .sessions
        .write()
        .await
        .insert(id.clone(), handle.clone());
    log::info!("created session {id}");
    let info = handle.request(Command::Info).await?;
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> Json<Vec<SessionInfo>> {
    let handles: Vec<_> = state.sessions.read().await.values().cloned().collect();
    let mut out = Vec::with_capacity(handles.len());
    for h in handles {
        if let Ok(info) = h.request(Command::Info).await {
            out.push(info);
        }
    }
    Json(out)
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionInfo>, ApiError> {
    Ok(Json(state.get(&id).await?.request(Command::Info).await?))
}

async fn delete_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    let handle = state
        .sessions
        .write()
        .await
        .remove(&id)
        .ok_or_else(|| ApiError::UnknownSession(id.clone()))?;
    handle.shutdown().await;
    log::info!("deleted session {id}");
    Ok(StatusCode::NO_CONTENT)
}

async fn add_sensor(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let def: SensorDef = parse_body(&body)?;
    let info = state
        .get(&id)
        .await?
        .request(|r| Command::AddSensor(def, r))
        .await?;
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn move_sensor(
    State(state): State<Arc<AppState>>,
    Path((id, sensor)): Path<(String, String)>,
    body: Bytes,
) -> Result<Json<SessionInfo>, ApiError> {
    let req: MoveSensorRequest = parse_body(&body)?;
    let info = state
        .get(&id)
        .await?
        .request(|r| Command::MoveSensor(sensor, req.attachment, r))
        .await?;
    Ok(Json(info))
}

async fn remove_sensor(
    State(state): State<Arc<AppState>>,
    Path((id, sensor)): Path<(String, String)>,
) -> Result<Json<SessionInfo>, ApiError> {
    let info = state
        .get(&id)
        .await?
        .request(|r| Command::RemoveSensor(sensor, r))
        .await?;
    Ok(Json(info))
}

async fn add_prefab(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let spec: MatrixPrefabSpec = parse_body(&body)?;
    let (ids, info) = state
        .get(&id)
        .await?
        .request(|r| Command::AddPrefab(spec, r))
        .await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({"sensor_ids": ids, "session": info})),
    )
        .into_response())
}

async fn transport(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionInfo>, ApiError> {
    let cmd: TransportCommand = parse_body(&body)?;
    let info = state
        .get(&id)
        .await?
        .request(|r| Command::Transport(cmd, r))
        .await?;
    Ok(Json(info))
}

async fn export(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let bytes = state.get(&id).await?.request(Command::Export).await?;
    let disposition = format!("attachment; filename=\"session-{id}.zip\"");
    Ok((
        [
            (header::CONTENT_TYPE, "application/zip".to_string()),
            (header::CONTENT_DISPOSITION, disposition),
        ],
        bytes,
    )
        .into_response())
}

async fn stream(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let handle = state.get(&id).await?;
    Ok(ws.on_upgrade(move |socket| stream_session(socket, id, handle)))
}

async fn stream_session(socket: WebSocket, id: String, handle: SessionHandle) {
    let Ok((initial, mut events)) = handle.subscribe().await else {
        return;
    };
    let (mut sink, mut incoming) = socket.split();
    for msg in initial {
        if sink.send(Message::Text(msg)).await.is_err() {
            return;
        }
    }
    loop {
        tokio::select! {
            event = events.recv() => match event {
                Ok(text) => {
                    if sink.send(Message::Text(text)).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(skipped)) => {
                    let msg = protocol::envelope(
                        "error",
                        &id,
                        json!({"code": "lagged", "message": format!("{skipped} messages dropped")}),
                    );
                    if sink.send(Message::Text(msg.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Closed) => {
                    let frame = CloseFrame {
                        code: CLOSE_SESSION_DELETED,
                        reason: "session deleted".into(),
                    };
                    let _ = sink.send(Message::Close(Some(frame))).await;
                    break;
                }
            },
            frame = incoming.next() => match frame {
                Some(Ok(Message::Text(text))) => {
                    let reply = client_command(&handle, &id, text.as_str()).await;
                    if sink.send(Message::Text(reply.into())).await.is_err() {
                        break;
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

/// Runs one stream command and renders the `ack` or `error` reply.
async fn client_command(handle: &SessionHandle, id: &str, text: &str) -> String {
    let msg: ClientMessage = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => {
            let err = ApiError::BadRequest(format!("invalid command: {e}"));
            return protocol::envelope("error", id, err.body());
        }
    };
    let result: Result<Value, ApiError> = match msg.command {
        ClientCommand::Transport(t) => handle
            .request(|r| Command::Transport(t, r))
            .await
            .map(to_value),
        ClientCommand::AddSensor { sensor } => handle
            .request(|r| Command::AddSensor(sensor, r))
            .await
            .map(to_value),
        ClientCommand::MoveSensor { id, attachment } => handle
            .request(|r| Command::MoveSensor(id, attachment, r))
            .await
            .map(to_value),
        ClientCommand::RemoveSensor { id } => handle
            .request(|r| Command::RemoveSensor(id, r))
            .await
            .map(to_value),
        ClientCommand::AddPrefab { prefab } => handle
            .request(|r| Command::AddPrefab(prefab, r))
            .await
            .map(|(ids, info)| json!({"sensor_ids": ids, "session": info})),
        ClientCommand::GetState => handle.request(Command::Info).await.map(to_value),
    };
    match result {
        Ok(v) => protocol::envelope("ack", id, ack_payload(msg.request_id, v)),
        Err(e) => {
            let mut body = serde_json::to_value(e.body()).unwrap_or(Value::Null);
            body["request_id"] = msg.request_id.unwrap_or(Value::Null);
            protocol::envelope("error", id, body)
        }
    }
}

fn to_value<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}
