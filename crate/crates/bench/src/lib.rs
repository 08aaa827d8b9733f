//! Workload generators shared by the criterion benches and the acceptance
//! suite: triangle scenes, ray batches, a brute-force ray-cast oracle and a
//! throughput session.

use std::fmt::Write as _;
use std::path::Path;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use vsens_core::geometry::{intersect_triangle, Aabb, Ray, TriangleMesh};
use vsens_core::simulation::SessionConfig;
use vsens_core::Vec3;

/// Seeded uniform sampler.
pub struct Sampler(SplitMix64);

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler(SplitMix64::seed_from_u64(seed))
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * u
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn point_in(&mut self, b: &Aabb) -> Vec3 {
        Vec3::new(
            self.uniform(b.min.x, b.max.x),
            self.uniform(b.min.y, b.max.y),
            self.uniform(b.min.z, b.max.z),
        )
    }

    /// Uniform on the unit sphere.
    pub fn direction(&mut self) -> Vec3 {
        let z = self.uniform(-1.0, 1.0);
        let phi = self.uniform(0.0, std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Vec3::new(r * phi.cos(), r * phi.sin(), z)
    }
}

/// `count` independent small triangles scattered in a cube of half-width
/// `half`.
pub fn triangle_soup(seed: u64, count: usize, half: f64) -> TriangleMesh {
    let mut s = Sampler::new(seed);
    let size = half * 0.15;
    let mut vertices = Vec::with_capacity(3 * count);
    let mut triangles = Vec::with_capacity(count);
    for i in 0..count {
        let c = Vec3::new(
            s.uniform(-half, half),
            s.uniform(-half, half),
            s.uniform(-half, half),
        );
        for _ in 0..3 {
            let d = Vec3::new(
                s.uniform(-size, size),
                s.uniform(-size, size),
                s.uniform(-size, size),
            );
            vertices.push(c + d);
        }
        let b = 3 * i as u32;
        triangles.push([b, b + 1, b + 2]);
    }
    TriangleMesh::new("soup", vertices, triangles).expect("non-empty soup")
}

/// Rolling terrain over `[-size/2, size/2]²`: `2 * cells²` triangles.
pub fn heightfield(seed: u64, cells: usize, size: f64) -> TriangleMesh {
    let mut s = Sampler::new(seed);
    let (a, b) = (s.uniform(0.5, 2.0), s.uniform(0.5, 2.0));
    let n = cells + 1;
    let mut vertices = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = size * (i as f64 / cells as f64 - 0.5);
            let z = size * (j as f64 / cells as f64 - 0.5);
            let y = 0.3 * (a * x).sin() * (b * z).cos() + s.uniform(-0.02, 0.02);
            vertices.push(Vec3::new(x, y, z));
        }
    }
    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for i in 0..cells {
        for j in 0..cells {
            let v = |i: usize, j: usize| (i * n + j) as u32;
            triangles.push([v(i, j), v(i, j + 1), v(i + 1, j + 1)]);
            triangles.push([v(i, j), v(i + 1, j + 1), v(i + 1, j)]);
        }
    }
    TriangleMesh::new("terrain", vertices, triangles).expect("valid grid")
}

/// Floor and four walls of a 6 × 2.5 × 6 m room centered on the origin,
/// each face split into `n × n` quads: `10 n²` triangles.
pub fn room(n: usize) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut face = |origin: Vec3, u: Vec3, v: Vec3| {
        let base = vertices.len() as u32;
        for i in 0..=n {
            for j in 0..=n {
                let (fi, fj) = (i as f64 / n as f64, j as f64 / n as f64);
                vertices.push(origin + u * fi + v * fj);
            }
        }
        let idx = |i: usize, j: usize| base + (i * (n + 1) + j) as u32;
        for i in 0..n {
            for j in 0..n {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    };
    let (w, h) = (6.0, 2.5);
    face(
        Vec3::new(-3.0, 0.0, -3.0),
        Vec3::new(w, 0.0, 0.0),
        Vec3::new(0.0, 0.0, w),
    );
    face(
        Vec3::new(-3.0, 0.0, -3.0),
        Vec3::new(w, 0.0, 0.0),
        Vec3::new(0.0, h, 0.0),
    );
    face(
        Vec3::new(-3.0, 0.0, 3.0),
        Vec3::new(w, 0.0, 0.0),
        Vec3::new(0.0, h, 0.0),
    );
    face(
        Vec3::new(-3.0, 0.0, -3.0),
        Vec3::new(0.0, 0.0, w),
        Vec3::new(0.0, h, 0.0),
    );
    face(
        Vec3::new(3.0, 0.0, -3.0),
        Vec3::new(0.0, 0.0, w),
        Vec3::new(0.0, h, 0.0),
    );
    TriangleMesh::new("room", vertices, triangles).expect("valid room")
}

/// Rays starting inside the (padded) mesh bounds. Every second ray is aimed
/// at a random triangle's centroid so hits and misses are both common.
pub fn random_rays(seed: u64, mesh: &TriangleMesh, count: usize) -> Vec<Ray> {
    let mut s = Sampler::new(seed);
    let b = mesh.bounds().expect("non-empty mesh");
    let pad = Vec3::new(0.5, 0.5, 0.5);
    let region = Aabb {
        min: b.min - pad,
        max: b.max + pad,
    };
    let mut rays = Vec::with_capacity(count);
    while rays.len() < count {
        let origin = s.point_in(&region);
        let dir = if rays.len() % 2 == 0 {
            let [p, q, r] = mesh.triangle(s.index(mesh.triangles().len()));
            (p + q + r) / 3.0 - origin
        } else {
            s.direction()
        };
        if let Ok(ray) = Ray::new(origin, dir) {
            rays.push(ray);
        }
    }
    rays
}

/// Tests every triangle: nearest `t` in `[0, max_t]`, ties to the lowest id.
pub fn brute_force(mesh: &TriangleMesh, ray: &Ray, max_t: f64) -> Option<(f64, u32)> {
    let mut best: Option<(f64, u32)> = None;
    for i in 0..mesh.triangles().len() {
        if let Some(t) = intersect_triangle(ray, &mesh.triangle(i)) {
            if t <= max_t && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i as u32));
            }
        }
    }
    best
}

pub fn obj_text(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

/// A looping two-second walk in meters: hips travel along +Z with arm and
/// leg swing, `rate` frames per second.
pub fn walk_bvh(rate: f64) -> String {
    let mut s = String::from(
        "HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT Spine
  {
    OFFSET 0 0.1 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    JOINT Chest
    {
      OFFSET 0 0.2 0
      CHANNELS 3 Zrotation Xrotation Yrotation
      JOINT Head
      {
        OFFSET 0 0.3 0
        CHANNELS 3 Zrotation Xrotation Yrotation
        End Site
        {
          OFFSET 0 0.2 0
        }
      }
      JOINT LeftArm
      {
        OFFSET 0.18 0.15 0
        CHANNELS 3 Zrotation Xrotation Yrotation
        JOINT LeftHand
        {
          OFFSET 0 -0.5 0
          CHANNELS 3 Zrotation Xrotation Yrotation
          End Site
          {
            OFFSET 0 -0.1 0
          }
        }
      }
      JOINT RightArm
      {
        OFFSET -0.18 0.15 0
        CHANNELS 3 Zrotation Xrotation Yrotation
        JOINT RightHand
        {
          OFFSET 0 -0.5 0
          CHANNELS 3 Zrotation Xrotation Yrotation
          End Site
          {
            OFFSET 0 -0.1 0
          }
        }
      }
    }
  }
  JOINT LeftLeg
  {
    OFFSET 0.09 -0.05 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0 -0.85 0
    }
  }
  JOINT RightLeg
  {
    OFFSET -0.09 -0.05 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0 -0.85 0
    }
  }
}
MOTION
",
    );
    let frames = (2.0 * rate).round() as usize + 1;
    let _ = writeln!(s, "Frames: {frames}\nFrame Time: {}", 1.0 / rate);
    for i in 0..frames {
        let t = i as f64 / rate;
        let ph = std::f64::consts::TAU * t;
        let swing = 25.0 * ph.sin();
        let row = [
            0.0,
            0.95 + 0.02 * (2.0 * ph).sin(),
            -1.0 + t,
            2.0 * ph.sin(),
            0.0,
            5.0 * ph.sin(),
            0.0,
            -2.0,
            0.0,
            0.0,
            -1.0,
            -3.0 * ph.sin(),
            0.0,
            3.0,
            0.0,
            8.0,
            -swing,
            0.0,
            0.0,
            -20.0,
            0.0,
            -8.0,
            swing,
            0.0,
            0.0,
            -20.0,
            0.0,
            0.0,
            1.2 * swing,
            0.0,
            0.0,
            -1.2 * swing,
            0.0,
        ];
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

/// Triangles in the throughput room.
pub const THROUGHPUT_ROOM_CELLS: usize = 32;

/// Writes `walk.bvh` and `room.obj` into `dir` and returns a config with a
/// `side`×`side` distance matrix on the chest facing the back wall, an IMU on
/// the hips, body proxies on every bone, looping for `duration` seconds at
/// 60 Hz.
pub fn throughput_config(dir: &Path, side: usize, duration: f64) -> std::io::Result<SessionConfig> {
    std::fs::write(dir.join("walk.bvh"), walk_bvh(60.0))?;
    std::fs::write(dir.join("room.obj"), obj_text(&room(THROUGHPUT_ROOM_CELLS)))?;
    let json = serde_json::json!({
        "schema": 1,
        "simulation_rate": 60,
        "duration": duration,
        "loop": true,
        "clip": "walk.bvh",
        "meshes": ["room.obj"],
        "body_proxies": {"all_bones": true, "default_radius": 0.06},
        "sensors": [
            {"id": "hips_imu", "spec": {"type": "imu", "emit_angular_velocity": true},
             "attachment": {"kind": "bone", "bone_name": "Hips"}}
        ],
        "prefabs": [
            {"id": "matrix", "rows": side, "cols": side, "spacing": 0.03,
             "element": {"max_range": 8, "noise": {"stddev": 0.001}},
             "attachment": {"kind": "bone", "bone_name": "Chest",
                            "local_offset": {"position": [0, 0, -0.15]}}}
        ],
        "seed": 1
    });
    Ok(serde_json::from_value(json).expect("throughput config is valid"))
}
