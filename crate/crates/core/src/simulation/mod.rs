//! Fixed-step session engine.
//!
//! A [`Session`] is built from a [`SessionConfig`]: the clip drives the
//! skeleton, body proxies follow it, and every sensor is evaluated on each
//! tick `k` at time `k / simulation_rate`. Both ends are included, so two
//! seconds at 60 Hz is 121 ticks. Results go into a [`Recording`], which
//! exports one CSV and one JSON metadata sidecar per sensor.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "simulation_rate": 60,
//!   "clip": "walk.bvh",
//!   "unit_scale": 0.01,
//!   "meshes": ["room.obj"],
//!   "body_proxies": { "all_bones": true, "default_radius": 0.06 },
//!   "sensors": [
//!     { "id": "wall", "spec": { "type": "distance", "max_range": 4 },
//!       "attachment": { "kind": "world",
//!                       "local_offset": { "position": [0, 1, 2] } } },
//!     { "id": "wrist", "spec": { "type": "imu", "smoothing_window": 5 },
//!       "attachment": { "kind": "bone", "bone_name": "RightHand" } }
//!   ],
//!   "prefabs": [
//!     { "id": "grid", "rows": 2, "cols": 3, "spacing": 0.05,
//!       "attachment": { "kind": "world" } }
//!   ],
//!   "seed": 7
//! }
//! ```

mod config;
mod recording;
mod session;

pub use config::{
    last_tick, load_config, parse_config, ConfigError, ConfigErrorKind, SessionConfig,
    SCHEMA_VERSION,
};
pub use recording::{export_csv, Recording, SensorMeta, Series, ENGINE};
pub use session::{run, Session, TickReport};

use crate::geometry::GeometryError;
use crate::mocap::MocapError;
use crate::sensors::SensorError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulationError {
    #[error("session finished")]
    SessionFinished,
    #[error("unknown sensor {0:?}")]
    UnknownSensor(String),
    #[error("sensor id {0:?} already exists")]
    DuplicateSensor(String),
    #[error("seek to {t} s outside [0, {duration}] s")]
    SeekOutOfRange { t: f64, duration: f64 },
    #[error("{}", join_errors(.0))]
    Config(Vec<ConfigError>),
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Mocap(#[from] MocapError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn join_errors(errors: &[ConfigError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
