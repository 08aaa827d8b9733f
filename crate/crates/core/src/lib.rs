//! Virtual sensor simulation engine.
//!
//! Motion-capture clips drive a skeleton through forward kinematics; distance
//! sensors cast rays against static scene meshes and capsule body proxies;
//! virtual IMUs differentiate smoothed sensor trajectories. A fixed-step
//! [`simulation::Session`] ties these together and records per-sensor time
//! series that can be exported as CSV.

pub mod geometry;
pub mod math;
pub mod mocap;
pub mod sensors;
pub mod simulation;

pub use math::{Pose, UnitQuat, Vec3};
