use std::fmt::Write;

use super::{AnimationClip, Skeleton};

/// Re-serializes a skeleton and clip as BVH text.
///
/// Intended for debugging and round-trip tests: joint order, channel order and
/// offsets (in file units) are preserved exactly. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn write_bvh(skeleton: &Skeleton, clip: &AnimationClip) -> String {
    let mut out = String::from("HIERARCHY\n");
    write_joint(skeleton, 0, 0, &mut out);
    let _ = writeln!(out, "MOTION");
    let _ = writeln!(out, "Frames: {}", clip.frame_count());
    let _ = writeln!(out, "Frame Time: {}", clip.frame_time());
    for row in clip.frames() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

fn write_joint(skeleton: &Skeleton, index: usize, depth: usize, out: &mut String) {
    let joint = &skeleton.joints()[index];
    let pad = "\t".repeat(depth);
    if joint.is_end_site {
        let _ = writeln!(out, "{pad}End Site");
    } else if joint.parent.is_none() {
        let _ = writeln!(out, "{pad}ROOT {}", joint.name);
    } else {
        let _ = writeln!(out, "{pad}JOINT {}", joint.name);
    }
    let _ = writeln!(out, "{pad}{{");
    let o = joint.offset;
    let _ = writeln!(out, "{pad}\tOFFSET {} {} {}", o.x, o.y, o.z);
    if !joint.is_end_site {
        let names: Vec<&str> = joint.channels.iter().map(|c| c.as_str()).collect();
        let _ = writeln!(out, "{pad}\tCHANNELS {} {}", names.len(), names.join(" "));
    }
    for child in skeleton.children(index) {
        write_joint(skeleton, child, depth + 1, out);
    }
    let _ = writeln!(out, "{pad}}}");
}

#[cfg(test)]
mod tests {
    use super::super::parse_bvh;
    use super::*;
    use crate::mocap::fixtures::MINIMAL;

    #[test]
    fn round_trip_preserves_structure() {
        let (skel, clip) = parse_bvh(MINIMAL).unwrap();
        let text = write_bvh(&skel, &clip);
        let (skel2, clip2) = parse_bvh(&text).unwrap();
        assert_eq!(skel, skel2);
        assert_eq!(clip, clip2);
    }

    #[test]
    fn awkward_offsets_survive() {
        let text = MINIMAL.replace("OFFSET 0 1 0", "OFFSET 0.1 -3.3333333333333335 1e-7");
        let (skel, clip) = parse_bvh(&text).unwrap();
        let (skel2, _) = parse_bvh(&write_bvh(&skel, &clip)).unwrap();
        assert_eq!(skel.joints()[1].offset, skel2.joints()[1].offset);
    }
}
