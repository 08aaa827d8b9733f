//! JSON message shapes shared by the HTTP API and the WebSocket stream.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use vsens_core::geometry::{AccelIndex, Capsule};
use vsens_core::math::{Pose, Vec3};
use vsens_core::sensors::{Attachment, MatrixPrefabSpec, SensorDef, SensorSample};
use vsens_core::simulation::Session;

/// Version carried by every stream message.
pub const STREAM_SCHEMA: u32 = 1;

/// Triangle budget for meshes sent in `scene_state`.
pub const MAX_STREAM_TRIANGLES: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaybackState {
    Editing,
    Playing,
    Paused,
    Finished,
}

impl std::fmt::Display for PlaybackState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlaybackState::Editing => "editing",
            PlaybackState::Playing => "playing",
            PlaybackState::Paused => "paused",
            PlaybackState::Finished => "finished",
        })
    }
}

/// Snapshot of a session as returned by the HTTP API.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub state: PlaybackState,
    pub playback_position: f64,
    pub playback_speed: f64,
    pub duration: f64,
    pub simulation_rate: f64,
    pub next_tick: u64,
    pub tick_count: u64,
    pub recorded_samples: usize,
    pub sensors: Vec<SensorDef>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransportCommand {
    Play,
    Pause,
    /// Back to editing from paused.
    Edit,
    Seek {
        #[serde(alias = "time")]
        t: f64,
    },
    Speed {
        #[serde(alias = "speed")]
        x: f64,
    },
}

impl TransportCommand {
    pub fn name(&self) -> &'static str {
        match self {
            TransportCommand::Play => "play",
            TransportCommand::Pause => "pause",
            TransportCommand::Edit => "edit",
            TransportCommand::Seek { .. } => "seek",
            TransportCommand::Speed { .. } => "speed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveSensorRequest {
    pub attachment: Attachment,
}

/// Text frame sent by a stream client. `request_id` is echoed in the reply.
#[derive(Clone, Debug, Deserialize)]
pub struct ClientMessage {
    #[serde(default)]
    pub request_id: Option<Value>,
    #[serde(flatten)]
    pub command: ClientCommand,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientCommand {
    Transport(TransportCommand),
    AddSensor { sensor: SensorDef },
    MoveSensor { id: String, attachment: Attachment },
    RemoveSensor { id: String },
    AddPrefab { prefab: MatrixPrefabSpec },
    GetState,
}

/// `{schema, type, session_id, payload}` envelope of every server message.
#[derive(Serialize)]
pub(crate) struct Envelope<'a, P: Serialize> {
    pub schema: u32,
    #[serde(rename = "type")]
    pub kind: &'a str,
    pub session_id: &'a str,
    pub payload: P,
}

pub(crate) fn envelope<P: Serialize>(kind: &str, session_id: &str, payload: P) -> String {
    serde_json::to_string(&Envelope {
        schema: STREAM_SCHEMA,
        kind,
        session_id,
        payload,
    })
    .expect("stream payloads serialize")
}

#[derive(Serialize)]
pub(crate) struct JointPayload<'a> {
    pub name: &'a str,
    pub parent: Option<usize>,
}

#[derive(Serialize)]
pub(crate) struct MeshPayload<'a> {
    pub name: &'a str,
    pub vertices: &'a [Vec3],
    pub triangles: Vec<[u32; 3]>,
    pub source_triangles: usize,
}

#[derive(Serialize)]
pub(crate) struct SensorPayload<'a> {
    #[serde(flatten)]
    pub def: &'a SensorDef,
    pub channels: &'static [&'static str],
}

#[derive(Serialize)]
pub(crate) struct SensorPose<'a> {
    pub id: &'a str,
    pub pose: Pose,
}

#[derive(Serialize)]
pub(crate) struct PoseUpdate<'a> {
    pub tick: u64,
    pub time: f64,
    pub joints: &'a [Pose],
    pub capsules: &'a [Capsule],
    pub sensors: Vec<SensorPose<'a>>,
}

#[derive(Serialize)]
pub(crate) struct SampleBatch<'a> {
    pub tick: u64,
    pub time: f64,
    pub samples: &'a [SensorSample],
}

#[derive(Serialize)]
pub(crate) struct SceneState<'a> {
    pub session: SessionInfo,
    pub skeleton: Vec<JointPayload<'a>>,
    pub meshes: Vec<MeshPayload<'a>>,
    pub sensors: Vec<SensorPayload<'a>>,
    pub pose: PoseUpdate<'a>,
}

/// Picks every k-th triangle of each mesh so the scene stays within
/// `budget` triangles in total (as long as `budget` exceeds the mesh
/// count). Meshes are never dropped entirely.
pub fn decimate(meshes: &[std::sync::Arc<AccelIndex>], budget: usize) -> Vec<Vec<[u32; 3]>> {
    let total: usize = meshes.iter().map(|m| m.mesh().triangles().len()).sum();
    // Rounding up keeps one extra triangle per mesh at most.
    let room = budget.saturating_sub(meshes.len()).max(1);
    let stride = total.div_ceil(room).max(1);
    meshes
        .iter()
        .map(|m| {
            m.mesh()
                .triangles()
                .iter()
                .step_by(stride)
                .copied()
                .collect()
        })
        .collect()
}

pub(crate) fn pose_update(session: &Session, tick: u64) -> PoseUpdate<'_> {
    let poses = session.poses();
    PoseUpdate {
        tick,
        time: poses.time,
        joints: &poses.world,
        capsules: session.capsules(),
        sensors: session
            .sensors()
            .iter()
            .filter_map(|s| {
                vsens_core::sensors::sensor_world_pose(s, poses)
                    .ok()
                    .map(|pose| SensorPose { id: s.id(), pose })
            })
            .collect(),
    }
}
