use crate::math::Vec3;

use super::{Ray, TriangleMesh};

/// Minimum accepted hit distance and determinant magnitude in
/// [`intersect_triangle`].
pub const TRIANGLE_EPSILON: f64 = 1e-9;

const LEAF_SIZE: usize = 4;

/// Möller–Trumbore ray/triangle test. Both faces count as hits.
#[inline]
pub fn intersect_triangle(ray: &Ray, tri: &[Vec3; 3]) -> Option<f64> {
    let [v0, v1, v2] = *tri;
    let d = ray.direction();
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det.abs() < TRIANGLE_EPSILON {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin() - v0;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = d.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > TRIANGLE_EPSILON).then_some(t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn point(p: Vec3) -> Self {
        Aabb { min: p, max: p }
    }

    pub fn grow(self, p: Vec3) -> Self {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn union(self, other: Aabb) -> Self {
        Aabb {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|a| self.min[a] <= p[a] && p[a] <= self.max[a])
    }

    fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Grows the box by a tolerance proportional to its coordinate magnitude
    /// so that slab tests never reject a hit the triangle test accepts.
    fn padded(self) -> Self {
        let mag = self
            .min
            .to_array()
            .into_iter()
            .chain(self.max.to_array())
            .fold(1.0f64, |m, c| m.max(c.abs()));
        let pad = Vec3::splat(1e-9 * mag);
        Aabb {
            min: self.min - pad,
            max: self.max + pad,
        }
    }

    /// Entry distance of the ray into the box, clipped to `[0, limit]`.
    #[inline]
    fn entry(&self, origin: Vec3, inv_dir: Vec3, limit: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = limit;
        for a in 0..3 {
            let near = (self.min[a] - origin[a]) * inv_dir[a];
            let far = (self.max[a] - origin[a]) * inv_dir[a];
            t0 = t0.max(near.min(far));
            t1 = t1.min(near.max(far));
        }
        (t0 <= t1).then_some(t0)
    }
}

/// Interior nodes have `count == 0`; their left child is the next node and
/// the right child is at `right`.
#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    first: u32,
    count: u32,
    right: u32,
}

/// Bounding volume hierarchy over one triangle mesh: median split on the
/// longest centroid axis, at most four triangles per leaf.
#[derive(Clone, Debug)]
pub struct AccelIndex {
    mesh: TriangleMesh,
    nodes: Vec<Node>,
    /// Original triangle ids in leaf order.
    order: Vec<u32>,
    /// Triangle corners in leaf order.
    tris: Vec<[Vec3; 3]>,
}

impl AccelIndex {
    pub fn build(mesh: TriangleMesh) -> Self {
        let n = mesh.triangles().len();
        let tris: Vec<[Vec3; 3]> = (0..n).map(|i| mesh.triangle(i)).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|[a, b, c]| (*a + *b + *c) / 3.0).collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n.div_ceil(LEAF_SIZE));
        if n > 0 {
            build_node(&mut nodes, &mut order, 0, &tris, &centroids);
        }
        let tris = order.iter().map(|&i| tris[i as usize]).collect();
        AccelIndex {
            mesh,
            nodes,
            order,
            tris,
        }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn name(&self) -> &str {
        &self.mesh.name
    }

    pub fn triangle_count(&self) -> usize {
        self.order.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        self.nodes.first().map(|n| n.bounds)
    }

    /// Triangle ids held by each leaf, in traversal order.
    pub fn leaves(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.count > 0)
            .map(|n| &self.order[n.first as usize..(n.first + n.count) as usize])
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.count > 0 {
                1
            } else {
                1 + go(nodes, i + 1).max(go(nodes, n.right as usize))
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(&self.nodes, 0)
        }
    }

    /// Nearest hit with `t ≤ max_t` as `(t, triangle id)`. Equal distances
    /// resolve to the lowest triangle id.
    pub fn intersect(&self, ray: &Ray, max_t: f64) -> Option<(f64, u32)> {
        if self.nodes.is_empty() || max_t.is_nan() || max_t <= 0.0 {
            return None;
        }
        let origin = ray.origin();
        let d = ray.direction();
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut best: Option<(f64, u32)> = None;
        let mut limit = max_t;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        if self.nodes[0].bounds.entry(origin, inv, limit).is_some() {
            stack.push(0);
        }
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.bounds.entry(origin, inv, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                let range = node.first as usize..(node.first + node.count) as usize;
                for k in range {
                    let Some(t) = intersect_triangle(ray, &self.tris[k]) else {
                        continue;
                    };
                    let id = self.order[k];
                    let better = match best {
                        None => t <= limit,
                        Some((bt, bid)) => t < bt || (t == bt && id < bid),
                    };
                    if better {
                        best = Some((t, id));
                        limit = t;
                    }
                }
                continue;
            }
            let left = i + 1;
            let right = node.right;
            let tl = self.nodes[left as usize].bounds.entry(origin, inv, limit);
            let tr = self.nodes[right as usize].bounds.entry(origin, inv, limit);
            match (tl, tr) {
                (Some(a), Some(b)) => {
                    if a <= b {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
                (Some(_), None) => stack.push(left),
                (None, Some(_)) => stack.push(right),
                (None, None) => {}
            }
        }
        best
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [u32],
    first: usize,
    tris: &[[Vec3; 3]],
    centroids: &[Vec3],
) -> u32 {
    let idx = nodes.len();
    let mut bounds = Aabb::point(tris[order[0] as usize][0]);
    let mut cbounds = Aabb::point(centroids[order[0] as usize]);
    for &t in order.iter() {
        for v in tris[t as usize] {
            bounds = bounds.grow(v);
        }
        cbounds = cbounds.grow(centroids[t as usize]);
    }
    nodes.push(Node {
        bounds: bounds.padded(),
        first: first as u32,
        count: order.len() as u32,
        right: 0,
    });
    if order.len() <= LEAF_SIZE {
        return idx as u32;
    }
    let axis = cbounds.longest_axis();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let (lo, hi) = order.split_at_mut(mid);
    build_node(nodes, lo, first, tris, centroids);
    let right = build_node(nodes, hi, first + mid, tris, centroids);
    nodes[idx].count = 0;
    nodes[idx].right = right;
    idx as u32
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::math::{Pose, UnitQuat};
    use proptest::prelude::*;
    use rand_core::{RngCore, SeedableRng};
    use rand_xoshiro::SplitMix64;

    pub(crate) fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * u
    }

    pub(crate) fn random_vec(rng: &mut SplitMix64, half: f64) -> Vec3 {
        Vec3::new(
            uniform(rng, -half, half),
            uniform(rng, -half, half),
            uniform(rng, -half, half),
        )
    }

    /// Triangle soup: small triangles scattered in a cube of half-size 2.
    pub(crate) fn soup(seed: u64, count: usize) -> TriangleMesh {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let mut vertices = Vec::with_capacity(count * 3);
        let mut triangles = Vec::with_capacity(count);
        for i in 0..count {
            let c = random_vec(&mut rng, 2.0);
            for _ in 0..3 {
                vertices.push(c + random_vec(&mut rng, 0.3));
            }
            let b = 3 * i as u32;
            triangles.push([b, b + 1, b + 2]);
        }
        TriangleMesh::new("soup", vertices, triangles).unwrap()
    }

    fn brute_force(mesh: &TriangleMesh, ray: &Ray, max_t: f64) -> Option<(f64, u32)> {
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

    #[test]
    fn triangle_front_and_back() {
        let tri = [
            Vec3::new(-1.0, -1.0, -2.0),
            Vec3::new(1.0, -1.0, -2.0),
            Vec3::new(0.0, 1.0, -2.0),
        ];
        let fwd = Ray::new(Vec3::ZERO, -Vec3::Z).unwrap();
        assert_eq!(intersect_triangle(&fwd, &tri), Some(2.0));
        let back = Ray::new(Vec3::new(0.0, 0.0, -4.0), Vec3::Z).unwrap();
        assert_eq!(intersect_triangle(&back, &tri), Some(2.0));
        let away = Ray::new(Vec3::ZERO, Vec3::Z).unwrap();
        assert_eq!(intersect_triangle(&away, &tri), None);
        let parallel = Ray::new(Vec3::new(0.0, 0.0, -2.0), Vec3::X).unwrap();
        assert_eq!(intersect_triangle(&parallel, &tri), None);
        let beside = Ray::new(Vec3::new(2.0, 0.0, 0.0), -Vec3::Z).unwrap();
        assert_eq!(intersect_triangle(&beside, &tri), None);
    }

    #[test]
    fn every_triangle_in_exactly_one_leaf() {
        for (seed, n) in [(1, 1), (2, 4), (3, 5), (4, 97), (5, 1000)] {
            let index = AccelIndex::build(soup(seed, n));
            let mut seen = vec![0u32; n];
            for leaf in index.leaves() {
                assert!(!leaf.is_empty() && leaf.len() <= LEAF_SIZE);
                for &t in leaf {
                    seen[t as usize] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1), "n = {n}");
        }
    }

    #[test]
    fn leaf_boxes_contain_their_triangles() {
        let index = AccelIndex::build(soup(9, 300));
        for node in index.nodes.iter().filter(|n| n.count > 0) {
            for k in node.first..node.first + node.count {
                for v in index.tris[k as usize] {
                    assert!(node.bounds.contains(v));
                }
            }
        }
        let depth = index.depth();
        assert!(depth <= 10, "depth {depth}");
    }

    #[test]
    fn matches_brute_force_on_random_rays() {
        for seed in 0..4u64 {
            let mesh = soup(100 + seed, 500);
            let index = AccelIndex::build(mesh.clone());
            let mut rng = SplitMix64::seed_from_u64(seed);
            for _ in 0..2000 {
                let origin = random_vec(&mut rng, 3.0);
                let target = random_vec(&mut rng, 2.0);
                let Ok(ray) = Ray::new(origin, target - origin) else {
                    continue;
                };
                let max_t = uniform(&mut rng, 0.5, 8.0);
                let expect = brute_force(&mesh, &ray, max_t);
                let got = index.intersect(&ray, max_t);
                assert_eq!(got.map(|h| h.0.to_bits()), expect.map(|h| h.0.to_bits()));
                assert_eq!(got, expect);
            }
        }
    }

    #[test]
    fn axis_aligned_rays() {
        let mesh = soup(77, 400);
        let index = AccelIndex::build(mesh.clone());
        let mut rng = SplitMix64::seed_from_u64(5);
        let dirs = [Vec3::X, -Vec3::X, Vec3::Y, -Vec3::Y, Vec3::Z, -Vec3::Z];
        for _ in 0..500 {
            let origin = random_vec(&mut rng, 2.5);
            for d in dirs {
                let ray = Ray::new(origin, d).unwrap();
                assert_eq!(index.intersect(&ray, 10.0), brute_force(&mesh, &ray, 10.0));
            }
        }
    }

    #[test]
    fn max_range_is_inclusive() {
        let mesh = TriangleMesh::new(
            "q",
            vec![
                Vec3::new(-1.0, -1.0, -2.0),
                Vec3::new(1.0, -1.0, -2.0),
                Vec3::new(0.0, 1.0, -2.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let index = AccelIndex::build(mesh);
        let ray = Ray::new(Vec3::ZERO, -Vec3::Z).unwrap();
        assert_eq!(index.intersect(&ray, 2.0), Some((2.0, 0)));
        assert_eq!(index.intersect(&ray, 1.999), None);
    }

    #[test]
    fn coincident_triangles_pick_lowest_id() {
        let v = vec![
            Vec3::new(-1.0, -1.0, -2.0),
            Vec3::new(1.0, -1.0, -2.0),
            Vec3::new(0.0, 1.0, -2.0),
        ];
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for i in 0..9u32 {
            vertices.extend_from_slice(&v);
            triangles.push([3 * i, 3 * i + 1, 3 * i + 2]);
        }
        let index = AccelIndex::build(TriangleMesh::new("stack", vertices, triangles).unwrap());
        let ray = Ray::new(Vec3::ZERO, -Vec3::Z).unwrap();
        assert_eq!(index.intersect(&ray, 10.0), Some((2.0, 0)));
    }

    #[test]
    fn empty_mesh_never_hits() {
        let index = AccelIndex::build(TriangleMesh::new("e", vec![], vec![]).unwrap());
        let ray = Ray::new(Vec3::ZERO, Vec3::X).unwrap();
        assert_eq!(index.intersect(&ray, 1.0), None);
        assert_eq!(index.depth(), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn rigid_motion_preserves_distance(
            seed in 0u64..1000,
            axis in prop::array::uniform3(-1.0f64..1.0),
            angle in -3.0f64..3.0,
            shift in prop::array::uniform3(-5.0f64..5.0),
        ) {
            let mesh = soup(seed, 60);
            let pose = Pose::new(
                Vec3::from(shift),
                UnitQuat::from_axis_angle(Vec3::from(axis), angle),
            );
            let moved = TriangleMesh::new(
                "moved",
                mesh.vertices().iter().map(|v| pose.transform_point(*v)).collect(),
                mesh.triangles().to_vec(),
            ).unwrap();
            let a = AccelIndex::build(mesh);
            let b = AccelIndex::build(moved);
            let mut rng = SplitMix64::seed_from_u64(seed ^ 0xABCD);
            for _ in 0..50 {
                let o = random_vec(&mut rng, 3.0);
                let target = random_vec(&mut rng, 2.0);
                let Ok(r1) = Ray::new(o, target - o) else { continue };
                let r2 = Ray::new(pose.transform_point(o), pose.transform_vector(r1.direction())).unwrap();
                let h1 = a.intersect(&r1, 20.0).map(|h| h.0);
                let h2 = b.intersect(&r2, 20.0).map(|h| h.0);
                match (h1, h2) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}"),
                    (None, None) => {}
                    // A ray grazing an edge can flip under rounding.
                    (x, y) => {
                        let t = x.or(y).unwrap();
                        let p = r1.at(t);
                        let near_edge = (0..a.mesh().triangles().len()).any(|i| {
                            let [v0, v1, v2] = a.mesh().triangle(i);
                            [(v0, v1), (v1, v2), (v2, v0)].iter().any(|&(s, e)| {
                                let d = e - s;
                                let k = ((p - s).dot(d) / d.norm_squared()).clamp(0.0, 1.0);
                                (s + d * k).distance(p) < 1e-7
                            })
                        });
                        prop_assert!(near_edge, "hit disagreement away from an edge");
                    }
                }
            }
        }
    }
}
