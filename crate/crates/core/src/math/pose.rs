use serde::{Deserialize, Serialize};

use super::{UnitQuat, Vec3};

/// Rigid transform: rotate by `orientation`, then translate by `position`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    #[serde(default)]
    pub position: Vec3,
    #[serde(default)]
    pub orientation: UnitQuat,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Vec3::ZERO,
        orientation: UnitQuat::IDENTITY,
    };

    pub const fn new(position: Vec3, orientation: UnitQuat) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    pub const fn from_position(position: Vec3) -> Self {
        Pose::new(position, UnitQuat::IDENTITY)
    }

    /// Expresses `local` (given in this pose's frame) in the parent frame.
    #[inline]
    pub fn compose(&self, local: &Pose) -> Pose {
        Pose {
            position: self.position + self.orientation.rotate(local.position),
            orientation: self.orientation * local.orientation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose {
            position: -inv.rotate(self.position),
            orientation: inv,
        }
    }

    #[inline]
    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.position + self.orientation.rotate(p)
    }

    #[inline]
    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        self.orientation.rotate(v)
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.orientation.to_array().iter().all(|c| c.is_finite())
    }
}

/// Free-function form of [`Pose::compose`].
#[inline]
pub fn compose(parent: &Pose, local: &Pose) -> Pose {
    parent.compose(local)
}
