//! One task per session. All reads and mutations go through its command
//! queue, so a session is never touched from two places at once; stream
//! messages fan out through a broadcast channel.

use std::io::Write;
use std::time::Duration;

use axum::extract::ws::Utf8Bytes;
use serde_json::{json, Value};
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::time::{sleep_until, Instant};
use vsens_core::sensors::{Attachment, MatrixPrefabSpec, SensorDef};
use vsens_core::simulation::{export_csv, Session};
use zip::write::SimpleFileOptions;

use crate::protocol::{
    decimate, envelope, pose_update, JointPayload, MeshPayload, SampleBatch, SceneState,
    SensorPayload, SessionInfo, TransportCommand, MAX_STREAM_TRIANGLES,
};
use crate::{ApiError, PlaybackState};

const STREAM_CAPACITY: usize = 1024;
/// Ticks later than this are dropped from the schedule instead of replayed
/// in a burst.
const MAX_LAG: Duration = Duration::from_millis(250);

type Reply<T> = oneshot::Sender<Result<T, ApiError>>;

pub(crate) enum Command {
    Info(Reply<SessionInfo>),
    Subscribe(oneshot::Sender<(Vec<Utf8Bytes>, broadcast::Receiver<Utf8Bytes>)>),
    Transport(TransportCommand, Reply<SessionInfo>),
    AddSensor(SensorDef, Reply<SessionInfo>),
    MoveSensor(String, Attachment, Reply<SessionInfo>),
    RemoveSensor(String, Reply<SessionInfo>),
    AddPrefab(MatrixPrefabSpec, Reply<(Vec<String>, SessionInfo)>),
    Export(Reply<Vec<u8>>),
    /// Stops the actor; subscribers see the broadcast channel close.
    Shutdown,
}

/// Cheap handle to a running session actor.
#[derive(Clone)]
pub(crate) struct SessionHandle {
    tx: mpsc::Sender<Command>,
}

impl SessionHandle {
    pub fn spawn(id: String, session: Session) -> Self {
        let (tx, rx) = mpsc::channel(64);
        let (events, _) = broadcast::channel(STREAM_CAPACITY);
        let actor = Actor {
            id,
            session,
            state: PlaybackState::Editing,
            speed: 1.0,
            events,
            next_due: None,
        };
        tokio::spawn(actor.run(rx));
        SessionHandle { tx }
    }

    pub async fn request<T>(&self, make: impl FnOnce(Reply<T>) -> Command) -> Result<T, ApiError> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(make(reply))
            .await
            .map_err(|_| ApiError::Internal("session stopped".into()))?;
        rx.await
            .map_err(|_| ApiError::Internal("session stopped".into()))?
    }

    pub async fn shutdown(&self) {
        let _ = self.tx.send(Command::Shutdown).await;
    }

    pub async fn subscribe(
        &self,
    ) -> Result<(Vec<Utf8Bytes>, broadcast::Receiver<Utf8Bytes>), ApiError> {
        let (reply, rx) = oneshot::channel();
        self.tx
            .send(Command::Subscribe(reply))
            .await
            .map_err(|_| ApiError::Internal("session stopped".into()))?;
        rx.await
            .map_err(|_| ApiError::Internal("session stopped".into()))
    }
}

struct Actor {
    id: String,
    session: Session,
    state: PlaybackState,
    speed: f64,
    events: broadcast::Sender<Utf8Bytes>,
    /// Deadline of the next tick while playing.
    next_due: Option<Instant>,
}

impl Actor {
    async fn run(mut self, mut rx: mpsc::Receiver<Command>) {
        loop {
            let due = self.next_due;
            tokio::select! {
                biased;
                cmd = rx.recv() => match cmd {
                    Some(Command::Shutdown) | None => break,
                    Some(cmd) => self.handle(cmd),
                },
                _ = sleep_until(due.unwrap_or_else(Instant::now)), if due.is_some() => {
                    self.tick(due.unwrap_or_else(Instant::now));
                }
            }
        }
        log::debug!("session {} stopped", self.id);
    }

    fn period(&self) -> Duration {
        Duration::from_secs_f64(1.0 / (self.session.simulation_rate() * self.speed))
    }

    fn tick(&mut self, due: Instant) {
        let tick = self.session.next_tick();
        match self.session.step() {
            Ok(report) => {
                if self.events.receiver_count() > 0 {
                    let pose = envelope("pose_update", &self.id, pose_update(&self.session, tick));
                    self.broadcast(pose);
                    let batch = SampleBatch {
                        tick: report.tick,
                        time: report.time,
                        samples: &report.samples,
                    };
                    self.broadcast(envelope("sample_batch", &self.id, batch));
                }
            }
            Err(e) => {
                log::warn!("session {}: {e}", self.id);
                let msg = envelope(
                    "error",
                    &self.id,
                    json!({"code": "internal", "message": e.to_string()}),
                );
                self.broadcast(msg);
                self.state = PlaybackState::Paused;
                self.next_due = None;
                return;
            }
        }
        if self.session.is_finished() {
            self.state = PlaybackState::Finished;
            self.next_due = None;
            self.announce("finished");
            return;
        }
        let now = Instant::now();
        let mut next = due + self.period();
        if next + MAX_LAG < now {
            next = now;
        }
        self.next_due = Some(next);
    }

    fn broadcast(&self, text: String) {
        // No receivers is fine; the stream is optional.
        let _ = self.events.send(Utf8Bytes::from(text));
    }

    /// Tells every subscriber about a state change.
    fn announce(&self, event: &str) {
        if self.events.receiver_count() > 0 {
            let msg = envelope(
                "ack",
                &self.id,
                json!({"event": event, "session": self.info()}),
            );
            self.broadcast(msg);
        }
    }

    fn info(&self) -> SessionInfo {
        SessionInfo {
            session_id: self.id.clone(),
            state: self.state,
            playback_position: self.session.position(),
            playback_speed: self.speed,
            duration: self.session.duration(),
            simulation_rate: self.session.simulation_rate(),
            next_tick: self.session.next_tick(),
            tick_count: self.session.tick_count(),
            recorded_samples: self.session.recording().total_samples(),
            sensors: self.session.sensor_defs(),
        }
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Info(reply) => {
                let _ = reply.send(Ok(self.info()));
            }
            Command::Subscribe(reply) => {
                let rx = self.events.subscribe();
                let hello = envelope(
                    "hello",
                    &self.id,
                    json!({"engine": vsens_core::simulation::ENGINE}),
                );
                let scene = envelope("scene_state", &self.id, self.scene_state());
                let _ = reply.send((vec![hello.into(), scene.into()], rx));
            }
            Command::Transport(t, reply) => {
                let name = t.name();
                let result = self.transport(t).map(|()| self.info());
                if result.is_ok() {
                    self.announce(name);
                }
                let _ = reply.send(result);
            }
            Command::AddSensor(def, reply) => {
                let result = self
                    .editable("add a sensor")
                    .and_then(|()| Ok(self.session.add_sensor(def)?));
                self.finish_mutation("add_sensor", result, reply);
            }
            Command::MoveSensor(id, attachment, reply) => {
                let result = self
                    .editable("move a sensor")
                    .and_then(|()| Ok(self.session.move_sensor(&id, attachment)?));
                self.finish_mutation("move_sensor", result, reply);
            }
            Command::RemoveSensor(id, reply) => {
                let result = self
                    .editable("remove a sensor")
                    .and_then(|()| Ok(self.session.remove_sensor(&id)?));
                self.finish_mutation("remove_sensor", result, reply);
            }
            Command::AddPrefab(spec, reply) => {
                let result = self
                    .editable("add a prefab")
                    .and_then(|()| Ok(self.session.add_prefab(&spec)?));
                let result = result.map(|ids| {
                    self.announce("add_prefab");
                    (ids, self.info())
                });
                let _ = reply.send(result);
            }
            Command::Export(reply) => {
                let _ = reply.send(self.export());
            }
            Command::Shutdown => {}
        }
    }

    fn finish_mutation<T>(
        &mut self,
        event: &str,
        result: Result<T, ApiError>,
        reply: Reply<SessionInfo>,
    ) {
        let result = result.map(|_| {
            self.announce(event);
            self.info()
        });
        let _ = reply.send(result);
    }

    fn editable(&self, action: &'static str) -> Result<(), ApiError> {
        match self.state {
            PlaybackState::Editing | PlaybackState::Paused => Ok(()),
            state => Err(ApiError::InvalidState { action, state }),
        }
    }

    fn transport(&mut self, cmd: TransportCommand) -> Result<(), ApiError> {
        use PlaybackState::*;
        match cmd {
            TransportCommand::Play => match self.state {
                Finished => Err(ApiError::InvalidState {
                    action: "play",
                    state: Finished,
                }),
                Playing => Ok(()),
                Editing | Paused => {
                    self.state = Playing;
                    self.next_due = Some(Instant::now());
                    Ok(())
                }
            },
            TransportCommand::Pause => match self.state {
                Finished => Err(ApiError::InvalidState {
                    action: "pause",
                    state: Finished,
                }),
                _ => {
                    self.state = Paused;
                    self.next_due = None;
                    Ok(())
                }
            },
            TransportCommand::Edit => match self.state {
                Editing | Paused => {
                    self.state = Editing;
                    Ok(())
                }
                state => Err(ApiError::InvalidState {
                    action: "edit",
                    state,
                }),
            },
            TransportCommand::Seek { t } => {
                self.session.seek(t)?;
                match self.state {
                    Finished => self.state = Paused,
                    Playing => self.next_due = Some(Instant::now()),
                    Editing | Paused => {}
                }
                Ok(())
            }
            TransportCommand::Speed { x } => {
                if !(x.is_finite() && x > 0.0) {
                    return Err(ApiError::BadRequest(format!(
                        "speed must be positive and finite, got {x}"
                    )));
                }
                self.speed = x;
                Ok(())
            }
        }
    }

    fn scene_state(&self) -> SceneState<'_> {
        let s = &self.session;
        let skeleton = s
            .skeleton()
            .map(|sk| {
                sk.joints()
                    .iter()
                    .map(|j| JointPayload {
                        name: &j.name,
                        parent: j.parent,
                    })
                    .collect()
            })
            .unwrap_or_default();
        let meshes = s.scene().meshes();
        let kept = decimate(meshes, MAX_STREAM_TRIANGLES);
        let meshes = meshes
            .iter()
            .zip(kept)
            .map(|(m, triangles)| MeshPayload {
                name: m.name(),
                vertices: m.mesh().vertices(),
                triangles,
                source_triangles: m.triangle_count(),
            })
            .collect();
        let sensors = s
            .sensors()
            .iter()
            .map(|i| SensorPayload {
                def: i.def(),
                channels: i.channel_names(),
            })
            .collect();
        let tick = s.next_tick().saturating_sub(1);
        SceneState {
            session: self.info(),
            skeleton,
            meshes,
            sensors,
            pose: pose_update(s, tick),
        }
    }

    fn export(&self) -> Result<Vec<u8>, ApiError> {
        let rec = self.session.recording();
        if rec.total_samples() == 0 {
            return Err(ApiError::EmptyRecording);
        }
        let mut zip = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
        let options = SimpleFileOptions::default();
        let io = |e: std::io::Error| ApiError::Internal(e.to_string());
        let zerr = |e: zip::result::ZipError| ApiError::Internal(e.to_string());
        for id in rec.sensor_ids() {
            let csv = export_csv(rec, id)?;
            zip.start_file(format!("{id}.csv"), options).map_err(zerr)?;
            zip.write_all(csv.as_bytes()).map_err(io)?;
            let meta = rec.meta_json(id)?;
            zip.start_file(format!("{id}.meta.json"), options)
                .map_err(zerr)?;
            zip.write_all(meta.as_bytes()).map_err(io)?;
        }
        Ok(zip.finish().map_err(zerr)?.into_inner())
    }
}

/// Reply payload for stream commands.
pub(crate) fn ack_payload(request_id: Option<Value>, result: Value) -> Value {
    json!({"request_id": request_id, "result": result})
}
