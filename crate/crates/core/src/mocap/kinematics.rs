use crate::math::{catmull_rom_scalar, slerp, Pose, UnitQuat, Vec3};

use super::{AnimationClip, Joint, MocapError, Skeleton};

/// Slack accepted on either side of `[0, duration]` and when snapping a
/// sample time onto a frame boundary. Tick times are computed as `k / rate`
/// and may land a few ulps away from `frame × frame_time`.
const TIME_EPS: f64 = 1e-9;

/// World-space pose of every joint (End Sites included) at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseSet {
    pub time: f64,
    pub world: Vec<Pose>,
}

impl PoseSet {
    pub fn get(&self, joint: usize) -> Option<&Pose> {
        self.world.get(joint)
    }

    pub fn len(&self) -> usize {
        self.world.len()
    }

    pub fn is_empty(&self) -> bool {
        self.world.is_empty()
    }
}

fn decode_position(joint: &Joint, values: &[f64], scale: f64) -> Vec3 {
    let mut p = joint.offset * scale;
    for (channel, v) in joint.channels.iter().zip(values) {
        if !channel.is_rotation() {
            p += channel.axis().unit() * (v * scale);
        }
    }
    p
}

/// Applies rotation channels in listed order (intrinsic). With exactly three
/// rotation channels this equals `euler_to_quat` over their order.
fn decode_rotation(joint: &Joint, values: &[f64]) -> UnitQuat {
    joint
        .channels
        .iter()
        .zip(values)
        .filter(|(c, _)| c.is_rotation())
        .fold(UnitQuat::IDENTITY, |q, (c, v)| {
            q * c.axis().rotation_deg(*v)
        })
}

fn check_clip(skeleton: &Skeleton, clip: &AnimationClip) -> Result<(), MocapError> {
    if skeleton.channel_count() != clip.width() {
        return Err(MocapError::InvalidClip(format!(
            "clip rows have {} values but skeleton declares {} channels",
            clip.width(),
            skeleton.channel_count()
        )));
    }
    Ok(())
}

/// Decodes one joint's local transform for one frame. Position is
/// `offset × unit_scale` plus any position channels (also scaled); missing
/// channels contribute zero or identity.
pub fn local_pose(
    skeleton: &Skeleton,
    clip: &AnimationClip,
    joint: usize,
    frame: usize,
) -> Result<Pose, MocapError> {
    check_clip(skeleton, clip)?;
    let j = skeleton.joint(joint).ok_or(MocapError::JointOutOfRange {
        index: joint,
        len: skeleton.len(),
    })?;
    let row = clip.frame(frame).ok_or(MocapError::FrameOutOfRange {
        index: frame,
        len: clip.frame_count(),
    })?;
    let values = &row[skeleton.channel_range(joint)];
    Ok(Pose::new(
        decode_position(j, values, skeleton.unit_scale()),
        decode_rotation(j, values),
    ))
}

/// Composes local poses from the root outward. Relies on the skeleton's
/// parent-before-child ordering.
pub fn forward_kinematics(
    skeleton: &Skeleton,
    locals: &[Pose],
    time: f64,
) -> Result<PoseSet, MocapError> {
    if locals.len() != skeleton.len() {
        return Err(MocapError::PoseCountMismatch {
            expected: skeleton.len(),
            found: locals.len(),
        });
    }
    let mut world: Vec<Pose> = Vec::with_capacity(locals.len());
    for (joint, local) in skeleton.joints().iter().zip(locals) {
        let pose = match joint.parent {
            None => *local,
            Some(p) => world[p].compose(local),
        };
        world.push(pose);
    }
    Ok(PoseSet { time, world })
}

fn frame_locals(skeleton: &Skeleton, clip: &AnimationClip, frame: usize) -> Vec<Pose> {
    let row = clip.frame(frame).expect("frame index checked by caller");
    let scale = skeleton.unit_scale();
    skeleton
        .joints()
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let values = &row[skeleton.channel_range(i)];
            Pose::new(
                decode_position(j, values, scale),
                decode_rotation(j, values),
            )
        })
        .collect()
}

/// World pose of every joint at time `t` (seconds from the first frame).
///
/// Position channels follow a uniform Catmull–Rom curve through frames
/// `k-1 ..= k+2`, with the first and last frames repeated past the clip
/// edges. Rotations are slerped between the decoded orientations of frames
/// `k` and `k+1`. Times within 1e-9 s of a frame return that frame exactly.
pub fn sample_pose(
    skeleton: &Skeleton,
    clip: &AnimationClip,
    t: f64,
) -> Result<PoseSet, MocapError> {
    check_clip(skeleton, clip)?;
    let duration = clip.duration();
    if !(t >= -TIME_EPS && t <= duration + TIME_EPS) {
        return Err(MocapError::TimeOutOfRange { t, duration });
    }
    let frames = clip.frame_count();
    let u = (t / clip.frame_time()).max(0.0);
    let nearest = u.round();
    if frames == 1 || (u - nearest).abs() * clip.frame_time() <= TIME_EPS {
        let frame = (nearest as usize).min(frames - 1);
        return forward_kinematics(skeleton, &frame_locals(skeleton, clip, frame), t);
    }

    let k = (u.floor() as usize).min(frames - 2);
    let s = (u - k as f64).clamp(0.0, 1.0);
    let row = |i: isize| {
        let i = i.clamp(0, frames as isize - 1) as usize;
        clip.frame(i).expect("clamped frame index")
    };
    let (r_prev, r0, r1, r2) = (
        row(k as isize - 1),
        row(k as isize),
        row(k as isize + 1),
        row(k as isize + 2),
    );

    let scale = skeleton.unit_scale();
    let mut scratch = Vec::new();
    let locals: Vec<Pose> = skeleton
        .joints()
        .iter()
        .enumerate()
        .map(|(i, joint)| {
            let range = skeleton.channel_range(i);
            scratch.clear();
            scratch.extend(
                range
                    .clone()
                    .map(|c| catmull_rom_scalar(r_prev[c], r0[c], r1[c], r2[c], s)),
            );
            let position = decode_position(joint, &scratch, scale);
            let q0 = decode_rotation(joint, &r0[range.clone()]);
            let q1 = decode_rotation(joint, &r1[range]);
            Pose::new(position, slerp(q0, q1, s))
        })
        .collect();
    forward_kinematics(skeleton, &locals, t)
}
