use std::path::PathBuf;

use serde_json::{json, Value};
use vsens_core::geometry::parse_obj;
use vsens_core::mocap::{parse_bvh, AnimationClip, Skeleton};

use crate::{display, Failure};

#[derive(clap::Args)]
pub struct Args {
    /// A .bvh or .obj file.
    path: PathBuf,
    /// Machine-readable output on stdout.
    #[arg(long)]
    json: bool,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let ext = args
        .path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let text = std::fs::read_to_string(&args.path)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", display(&args.path))))?;
    let name = display(&args.path);
    let (report, human) = match ext.as_deref() {
        Some("bvh") => {
            let (skel, clip) =
                parse_bvh(&text).map_err(|e| Failure::invalid(format!("{name}: {e}")))?;
            bvh_report(&skel, &clip)
        }
        Some("obj") => {
            let mesh = parse_obj(&text).map_err(|e| Failure::invalid(format!("{name}: {e}")))?;
            let bounds = mesh.bounds();
            let report = json!({
                "kind": "obj",
                "vertices": mesh.vertices().len(),
                "triangles": mesh.triangles().len(),
                "degenerate_dropped": mesh.degenerate_dropped(),
                "bounds": bounds.map(|b| json!({"min": b.min, "max": b.max})),
            });
            let mut human = format!(
                "vertices: {}\ntriangles: {}\n",
                mesh.vertices().len(),
                mesh.triangles().len()
            );
            if mesh.degenerate_dropped() > 0 {
                human += &format!(
                    "degenerate triangles dropped: {}\n",
                    mesh.degenerate_dropped()
                );
            }
            if let Some(b) = bounds {
                human += &format!(
                    "bounds: [{}, {}, {}] .. [{}, {}, {}]\n",
                    b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z
                );
            }
            (report, human)
        }
        _ => {
            return Err(Failure::invalid(format!(
                "{name}: unsupported file type (expected .bvh or .obj)"
            )))
        }
    };
    if args.json {
        println!("{report}");
    } else {
        eprint!("{human}");
    }
    Ok(())
}

fn bvh_report(skel: &Skeleton, clip: &AnimationClip) -> (Value, String) {
    let joints: Vec<_> = skel
        .joints()
        .iter()
        .map(|j| {
            json!({
                "name": j.name,
                "parent": j.parent,
                "end_site": j.is_end_site,
                "offset": j.offset,
                "channels": j.channels.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let end_sites = skel.joints().iter().filter(|j| j.is_end_site).count();
    let joint_count = skel.len() - end_sites;
    let report = json!({
        "kind": "bvh",
        "joint_count": joint_count,
        "end_site_count": end_sites,
        "channel_count": skel.channel_count(),
        "frame_count": clip.frame_count(),
        "frame_time": clip.frame_time(),
        "duration": clip.duration(),
        "joints": joints,
    });

    let mut human = String::new();
    let mut depth = vec![0usize; skel.len()];
    for (i, j) in skel.joints().iter().enumerate() {
        depth[i] = j.parent.map_or(0, |p| depth[p] + 1);
        let indent = "  ".repeat(depth[i]);
        if j.is_end_site {
            human += &format!("{indent}{} (end site)\n", j.name);
        } else {
            let channels: Vec<_> = j.channels.iter().map(|c| c.as_str()).collect();
            human += &format!("{indent}{} [{}]\n", j.name, channels.join(" "));
        }
    }
    human += &format!(
        "joints: {joint_count}, end sites: {end_sites}, channels: {}\nframes: {}, frame time: {} s, duration: {} s\n",
        skel.channel_count(),
        clip.frame_count(),
        clip.frame_time(),
        clip.duration()
    );
    (report, human)
}
