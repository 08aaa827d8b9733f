//! Virtual sensors: attachments, distance sensors, IMUs, matrix prefabs and
//! the noise model.
//!
//! A distance sensor casts a ray along its local −Z axis and reports the hit
//! distance, or `max_range` with `hit = 0` on a miss. A virtual IMU keeps a
//! short history of its world pose at the simulation rate, smooths positions
//! with a centered moving average, takes the central second difference at the
//! center sample and reports proper acceleration in the sensor frame.
//!
//! IMU output lags the motion: with smoothing window `w` the history holds
//! `w + 2` samples and each output describes the sample `(w + 1) / 2` steps
//! behind the newest one. The first `(w + 1) / 2` ticks of a run, and the last
//! `(w + 1) / 2`, therefore produce no IMU output.

mod instance;
mod noise;
mod spec;

pub use instance::{
    eval_distance, eval_imu, sensor_world_pose, Schedule, SensorInstance, SensorSample,
};
pub use noise::{apply_noise, sensor_seed, NoiseRng};
pub use spec::{
    expand_prefab, prefab_offsets, Attachment, DistanceSensorSpec, ImuSpec, MatrixPrefabSpec,
    NoiseSpec, SensorDef, SensorSpec, SpecProblem, Stddev,
};

use crate::math::Vec3;

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Gravitational acceleration in the Y-up world frame.
pub const GRAVITY: Vec3 = Vec3 {
    x: 0.0,
    y: -STANDARD_GRAVITY,
    z: 0.0,
};

pub const DISTANCE_CHANNELS: [&str; 2] = ["distance", "hit"];
pub const IMU_CHANNELS: [&str; 6] = ["ax", "ay", "az", "gx", "gy", "gz"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SensorError {
    #[error("unknown joint {0:?}")]
    UnknownJoint(String),
    #[error("sensor {sensor:?}: {message}")]
    InvalidSpec { sensor: String, message: String },
    #[error("pose history spacing {found} s does not match step {expected} s")]
    HistorySpacingMismatch { expected: f64, found: f64 },
}
