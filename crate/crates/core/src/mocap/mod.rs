//! Biovision Hierarchy (BVH) motion capture: parsing, channel decoding,
//! forward kinematics and time-continuous pose sampling.
//!
//! A BVH file has two sections. `HIERARCHY` declares the joint tree with
//! per-joint `OFFSET` and `CHANNELS`; `End Site` blocks mark chain tips.
//! `MOTION` holds `Frames:`, `Frame Time:` and one whitespace-separated row of
//! channel values per frame, concatenated in joint declaration order.
//!
//! ```text
//! HIERARCHY
//! ROOT Hips
//! {
//!     OFFSET 0 0 0
//!     CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
//!     JOINT Chest
//!     {
//!         OFFSET 0 10 0
//!         CHANNELS 3 Zrotation Xrotation Yrotation
//!         End Site
//!         {
//!             OFFSET 0 5 0
//!         }
//!     }
//! }
//! MOTION
//! Frames: 1
//! Frame Time: 0.033333
//! 0 0 0 0 0 0 0 0 0
//! ```

mod kinematics;
mod parse;
mod skeleton;
mod write;

pub use kinematics::{forward_kinematics, local_pose, sample_pose, PoseSet};
pub use parse::parse_bvh;
pub use skeleton::{AnimationClip, Channel, Joint, Skeleton};
pub use write::write_bvh;

/// Structured BVH parse failure. Every variant carries the 1-based line number.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BvhError {
    #[error("line {line}: missing {section} section")]
    MissingSection { section: &'static str, line: usize },
    #[error("line {line}: motion row {row} has {found} values, expected {expected}")]
    ChannelMismatch {
        line: usize,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: malformed number {token:?}")]
    MalformedNumber { line: usize, token: String },
    #[error("line {line}: unbalanced braces")]
    UnbalancedBraces { line: usize },
    #[error("line {line}: expected {expected}, found {found:?}")]
    UnexpectedToken {
        line: usize,
        expected: &'static str,
        found: String,
    },
    #[error("line {line}: unknown channel {name:?}")]
    UnknownChannel { line: usize, name: String },
    #[error("line {line}: joint {joint:?} declares channel {channel} twice")]
    DuplicateChannel {
        line: usize,
        joint: String,
        channel: String,
    },
    #[error("line {line}: header declares {declared} frames but {found} rows follow")]
    FrameCountMismatch {
        line: usize,
        declared: usize,
        found: usize,
    },
    #[error("line {line}: {message}")]
    InvalidHeader { line: usize, message: String },
    #[error("line {line}: unexpected end of input")]
    UnexpectedEof { line: usize },
}

impl BvhError {
    pub fn line(&self) -> usize {
        match self {
            BvhError::MissingSection { line, .. }
            | BvhError::ChannelMismatch { line, .. }
            | BvhError::MalformedNumber { line, .. }
            | BvhError::UnbalancedBraces { line }
            | BvhError::UnexpectedToken { line, .. }
            | BvhError::UnknownChannel { line, .. }
            | BvhError::DuplicateChannel { line, .. }
            | BvhError::FrameCountMismatch { line, .. }
            | BvhError::InvalidHeader { line, .. }
            | BvhError::UnexpectedEof { line } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MocapError {
    #[error(transparent)]
    Parse(#[from] BvhError),
    #[error("joint index {index} out of range ({len} joints)")]
    JointOutOfRange { index: usize, len: usize },
    #[error("frame index {index} out of range ({len} frames)")]
    FrameOutOfRange { index: usize, len: usize },
    #[error("time {t} s outside clip range [0, {duration}] s")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("expected {expected} local poses, got {found}")]
    PoseCountMismatch { expected: usize, found: usize },
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error("unit scale must be positive and finite, got {0}")]
    InvalidUnitScale(f64),
}
