//! Geometric and numerical primitives shared by every other module.
//!
//! Conventions: right-handed frames, Y up, meters and seconds. Quaternions use
//! the Hamilton product and are stored scalar first. Trigonometry goes through
//! `libm` so results do not depend on the platform's C math library.

mod interp;
mod pose;
mod rotation;
mod vector;

pub use interp::{catmull_rom, catmull_rom_scalar, central_second_difference};
pub use pose::{compose, Pose};
pub use rotation::{euler_to_quat, slerp, Axis, RotationOrder, UnitQuat};
pub use vector::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MathError {
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("quaternion has zero or non-finite norm")]
    DegenerateQuaternion,
    #[error("rotation order {0:?} repeats an axis")]
    DuplicateAxis(String),
    #[error("invalid rotation order {0:?}")]
    InvalidRotationOrder(String),
}
