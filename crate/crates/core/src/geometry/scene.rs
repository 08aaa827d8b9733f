use std::sync::Arc;

use serde::Serialize;

use crate::math::Vec3;

use super::{ray_capsule, AccelIndex, Capsule, Ray};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Mesh,
    Capsule,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub point: Vec3,
    pub kind: TargetKind,
    /// Index into [`Scene::meshes`] or [`Scene::capsules`].
    pub target: usize,
    /// Triangle id within the mesh for mesh hits.
    pub triangle: Option<u32>,
}

/// Static meshes plus the current body capsules.
#[derive(Clone, Debug, Default)]
pub struct Scene {
    meshes: Vec<Arc<AccelIndex>>,
    capsules: Vec<Capsule>,
}

impl Scene {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_mesh(&mut self, mesh: Arc<AccelIndex>) -> usize {
        self.meshes.push(mesh);
        self.meshes.len() - 1
    }

    pub fn meshes(&self) -> &[Arc<AccelIndex>] {
        &self.meshes
    }

    pub fn capsules(&self) -> &[Capsule] {
        &self.capsules
    }

    pub fn set_capsules(&mut self, capsules: Vec<Capsule>) {
        self.capsules = capsules;
    }

    pub fn capsules_mut(&mut self) -> &mut Vec<Capsule> {
        &mut self.capsules
    }

    /// Nearest hit with distance at most `max_range`. Ties go to meshes before
    /// capsules, then to the lowest index.
    pub fn ray_cast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        let mut best: Option<RayHit> = None;
        let mut limit = max_range;
        for (i, mesh) in self.meshes.iter().enumerate() {
            if let Some((t, tri)) = mesh.intersect(ray, limit) {
                if best.is_none_or(|b| t < b.distance) {
                    limit = t;
                    best = Some(RayHit {
                        distance: t,
                        point: ray.at(t),
                        kind: TargetKind::Mesh,
                        target: i,
                        triangle: Some(tri),
                    });
                }
            }
        }
        for (i, capsule) in self.capsules.iter().enumerate() {
            if let Some(t) = ray_capsule(ray, capsule) {
                if t <= limit && best.is_none_or(|b| t < b.distance) {
                    limit = t;
                    best = Some(RayHit {
                        distance: t,
                        point: ray.at(t),
                        kind: TargetKind::Capsule,
                        target: i,
                        triangle: None,
                    });
                }
            }
        }
        best
    }
}

pub fn ray_cast(scene: &Scene, ray: &Ray, max_range: f64) -> Option<RayHit> {
    scene.ray_cast(ray, max_range)
}
