use serde::{Deserialize, Serialize};

use crate::mocap::{PoseSet, Skeleton};

use super::{Capsule, GeometryError};

fn default_radius() -> f64 {
    0.05
}

/// Which bones become collision capsules and how thick they are.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyProxyConfig {
    #[serde(default = "default_radius")]
    pub default_radius: f64,
    /// Add a capsule for every parent/child link in the skeleton. Entries in
    /// `bones` for the same pair override its radius and name.
    #[serde(default)]
    pub all_bones: bool,
    #[serde(default)]
    pub bones: Vec<BoneProxy>,
}

impl Default for BodyProxyConfig {
    fn default() -> Self {
        BodyProxyConfig {
            default_radius: default_radius(),
            all_bones: false,
            bones: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoneProxy {
    pub parent: String,
    pub child: String,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    name: String,
    parent: usize,
    child: usize,
    radius: f64,
}

/// Body proxy configuration resolved against one skeleton.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BodyProxies {
    entries: Vec<Entry>,
}

impl BodyProxies {
    pub fn bind(skeleton: &Skeleton, config: &BodyProxyConfig) -> Result<Self, GeometryError> {
        let check = |r: f64| {
            if r > 0.0 && r.is_finite() {
                Ok(r)
            } else {
                Err(GeometryError::InvalidRadius(r))
            }
        };
        let default = check(config.default_radius)?;
        let mut entries: Vec<Entry> = Vec::new();
        if config.all_bones {
            for (i, joint) in skeleton.joints().iter().enumerate() {
                if let Some(p) = joint.parent {
                    entries.push(Entry {
                        name: format!("{}-{}", skeleton.joints()[p].name, joint.name),
                        parent: p,
                        child: i,
                        radius: default,
                    });
                }
            }
        }
        for bone in &config.bones {
            let find = |name: &str| {
                skeleton
                    .find(name)
                    .ok_or_else(|| GeometryError::UnknownJoint(name.to_string()))
            };
            let parent = find(&bone.parent)?;
            let child = find(&bone.child)?;
            let entry = Entry {
                name: bone
                    .name
                    .clone()
                    .unwrap_or_else(|| format!("{}-{}", bone.parent, bone.child)),
                parent,
                child,
                radius: check(bone.radius.unwrap_or(default))?,
            };
            match entries
                .iter_mut()
                .find(|e| e.parent == parent && e.child == child)
            {
                Some(existing) => *existing = entry,
                None => entries.push(entry),
            }
        }
        Ok(BodyProxies { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    /// Capsules for `poses`, in configuration order.
    pub fn capsules(&self, poses: &PoseSet) -> Vec<Capsule> {
        let mut out = Vec::with_capacity(self.entries.len());
        self.write_capsules(poses, &mut out);
        out
    }

    /// Like [`capsules`](Self::capsules) but reuses `out`.
    pub fn write_capsules(&self, poses: &PoseSet, out: &mut Vec<Capsule>) {
        out.clear();
        out.extend(self.entries.iter().map(|e| Capsule {
            a: poses.world[e.parent].position,
            b: poses.world[e.child].position,
            radius: e.radius,
        }));
    }
}

/// One capsule per configured bone, spanning the parent and child joint
/// world positions.
pub fn body_capsules(
    poses: &PoseSet,
    skeleton: &Skeleton,
    config: &BodyProxyConfig,
) -> Result<Vec<Capsule>, GeometryError> {
    Ok(BodyProxies::bind(skeleton, config)?.capsules(poses))
}
