//! Scene geometry and ray queries.
//!
//! Static triangle meshes (loaded from OBJ) are indexed by an [`AccelIndex`];
//! the animated body is approximated by [`Capsule`]s rebuilt each tick from
//! the skeleton pose. [`Scene::ray_cast`] returns the nearest hit over both.

mod accel;
mod body;
mod capsule;
mod mesh;
mod scene;

pub use accel::{intersect_triangle, Aabb, AccelIndex, TRIANGLE_EPSILON};
pub use body::{body_capsules, BodyProxies, BodyProxyConfig, BoneProxy};
pub use capsule::{ray_capsule, Capsule};
pub use mesh::{parse_obj, TriangleMesh, DEGENERATE_AREA};
pub use scene::{ray_cast, RayHit, Scene, TargetKind};

use crate::math::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: vertex index {index} out of range ({count} vertices)")]
    IndexOutOfRange {
        line: usize,
        index: i64,
        count: usize,
    },
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("unknown joint {0:?}")]
    UnknownJoint(String),
    #[error("capsule radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("ray direction must be non-zero and finite")]
    ZeroDirection,
}

/// Half-line `origin + t · direction`, `t ≥ 0`, with unit `direction`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    origin: Vec3,
    direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self, GeometryError> {
        let direction = direction
            .try_normalize()
            .ok_or(GeometryError::ZeroDirection)?;
        Ok(Ray { origin, direction })
    }

    #[inline]
    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    #[inline]
    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}
