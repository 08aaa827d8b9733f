use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::math::{Axis, Vec3};

use super::MocapError;

/// One degree of freedom of a joint, as named in a `CHANNELS` line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    pub fn axis(self) -> Axis {
        match self {
            Channel::Xposition | Channel::Xrotation => Axis::X,
            Channel::Yposition | Channel::Yrotation => Axis::Y,
            Channel::Zposition | Channel::Zrotation => Axis::Z,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(
            self,
            Channel::Xrotation | Channel::Yrotation | Channel::Zrotation
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        // Some exporters write lower-case channel names.
        Ok(match s.to_ascii_lowercase().as_str() {
            "xposition" => Channel::Xposition,
            "yposition" => Channel::Yposition,
            "zposition" => Channel::Zposition,
            "xrotation" => Channel::Xrotation,
            "yrotation" => Channel::Yrotation,
            "zrotation" => Channel::Zrotation,
            _ => return Err(()),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    /// `None` only for the root. Always smaller than the joint's own index.
    pub parent: Option<usize>,
    /// Offset from the parent joint, in file units.
    pub offset: Vec3,
    pub channels: Vec<Channel>,
    pub is_end_site: bool,
}

/// Joint hierarchy in topological (declaration) order.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
    channel_starts: Vec<usize>,
    channel_count: usize,
    unit_scale: f64,
    index_by_name: HashMap<String, usize>,
    duplicate_names: Vec<String>,
}

impl Skeleton {
    /// Validates the hierarchy: one root at index 0, parents precede children,
    /// End Sites carry no channels.
    pub fn new(joints: Vec<Joint>) -> Result<Self, MocapError> {
        if joints.is_empty() {
            return Err(MocapError::InvalidSkeleton("no joints".into()));
        }
        let mut channel_starts = Vec::with_capacity(joints.len());
        let mut channel_count = 0;
        let mut index_by_name = HashMap::new();
        let mut duplicate_names = Vec::new();
        for (i, joint) in joints.iter().enumerate() {
            match joint.parent {
                None if i != 0 => {
                    return Err(MocapError::InvalidSkeleton(format!(
                        "joint {:?} at index {i} has no parent; only the first joint may be a root",
                        joint.name
                    )))
                }
                Some(_) if i == 0 => {
                    return Err(MocapError::InvalidSkeleton(
                        "first joint must be the root".into(),
                    ))
                }
                Some(p) if p >= i => {
                    return Err(MocapError::InvalidSkeleton(format!(
                        "joint {:?} refers to parent {p} declared after it",
                        joint.name
                    )))
                }
                _ => {}
            }
            if joint.is_end_site && !joint.channels.is_empty() {
                return Err(MocapError::InvalidSkeleton(format!(
                    "end site {:?} has channels",
                    joint.name
                )));
            }
            channel_starts.push(channel_count);
            channel_count += joint.channels.len();
            if index_by_name.contains_key(&joint.name) {
                duplicate_names.push(joint.name.clone());
            } else {
                index_by_name.insert(joint.name.clone(), i);
            }
        }
        for name in &duplicate_names {
            log::warn!("skeleton has duplicate joint name {name:?}; lookups use the first match");
        }
        Ok(Skeleton {
            joints,
            channel_starts,
            channel_count,
            unit_scale: 1.0,
            index_by_name,
            duplicate_names,
        })
    }

    /// Sets the multiplier from file length units to meters.
    pub fn with_unit_scale(mut self, unit_scale: f64) -> Result<Self, MocapError> {
        if !(unit_scale > 0.0 && unit_scale.is_finite()) {
            return Err(MocapError::InvalidUnitScale(unit_scale));
        }
        self.unit_scale = unit_scale;
        Ok(self)
    }

    pub fn unit_scale(&self) -> f64 {
        self.unit_scale
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint(&self, index: usize) -> Option<&Joint> {
        self.joints.get(index)
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Index of the first joint called `name`.
    pub fn find(&self, name: &str) -> Option<usize> {
        let index = self.index_by_name.get(name).copied();
        if index.is_some() && self.duplicate_names.iter().any(|d| d == name) {
            log::warn!("joint name {name:?} is ambiguous; using the first declaration");
        }
        index
    }

    pub fn duplicate_names(&self) -> &[String] {
        &self.duplicate_names
    }

    /// Total number of channels over all joints, i.e. the motion row width.
    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    /// Column range of `joint`'s channels within a motion row.
    pub fn channel_range(&self, joint: usize) -> Range<usize> {
        let start = self.channel_starts[joint];
        start..start + self.joints[joint].channels.len()
    }

    pub fn children(&self, joint: usize) -> impl Iterator<Item = usize> + '_ {
        self.joints
            .iter()
            .enumerate()
            .filter(move |(_, j)| j.parent == Some(joint))
            .map(|(i, _)| i)
    }
}

/// Per-frame channel values with a fixed frame period.
#[derive(Clone, Debug, PartialEq)]
pub struct AnimationClip {
    frame_time: f64,
    width: usize,
    frame_count: usize,
    values: Vec<f64>,
}

impl AnimationClip {
    pub fn new(frame_time: f64, width: usize, rows: Vec<Vec<f64>>) -> Result<Self, MocapError> {
        let frame_count = rows.len();
        let mut values = Vec::with_capacity(frame_count * width);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(MocapError::InvalidClip(format!(
                    "row {i} has {} values, expected {width}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        AnimationClip::from_flat(frame_time, width, frame_count, values)
    }

    pub(crate) fn from_flat(
        frame_time: f64,
        width: usize,
        frame_count: usize,
        values: Vec<f64>,
    ) -> Result<Self, MocapError> {
        if !(frame_time > 0.0 && frame_time.is_finite()) {
            return Err(MocapError::InvalidClip(format!(
                "frame time must be positive, got {frame_time}"
            )));
        }
        if frame_count == 0 {
            return Err(MocapError::InvalidClip(
                "clip needs at least one frame".into(),
            ));
        }
        if values.len() != frame_count * width {
            return Err(MocapError::InvalidClip("ragged frame data".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MocapError::InvalidClip("non-finite channel value".into()));
        }
        Ok(AnimationClip {
            frame_time,
            width,
            frame_count,
            values,
        })
    }

    pub fn frame_time(&self) -> f64 {
        self.frame_time
    }

    /// Number of values per frame.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    /// `(frame_count - 1) × frame_time`.
    pub fn duration(&self) -> f64 {
        (self.frame_count - 1) as f64 * self.frame_time
    }

    pub fn frame(&self, index: usize) -> Option<&[f64]> {
        (index < self.frame_count)
            .then(|| &self.values[index * self.width..(index + 1) * self.width])
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.frame_count).map(|i| &self.values[i * self.width..(i + 1) * self.width])
    }
}
