use crate::math::Vec3;

use super::{GeometryError, Ray};

/// Points within `radius` of the segment `a`–`b`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Capsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Vec3, b: Vec3, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidRadius(radius));
        }
        Ok(Capsule { a, b, radius })
    }

    /// Signed distance from `p` to the capsule surface.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        let k = if len2 > 0.0 {
            ((p - self.a).dot(ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (self.a + ab * k).distance(p) - self.radius
    }
}

/// Smallest `t ≥ 0` where the ray meets the capsule surface: the cylinder
/// body between the end caps, or either hemispherical cap. For an origin
/// inside the capsule that is the exit distance.
pub fn ray_capsule(ray: &Ray, capsule: &Capsule) -> Option<f64> {
    let o = ray.origin();
    let d = ray.direction();
    let r = capsule.radius;
    let ab = capsule.b - capsule.a;
    let len = ab.norm();
    let oa = o - capsule.a;
    let mut best: Option<f64> = None;
    let mut offer = |t: f64| {
        if t >= 0.0 && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };

    let Some(u) = ab.try_normalize() else {
        for t in sphere_roots(oa, d, r).into_iter().flatten() {
            offer(t);
        }
        return best;
    };

    // Axial coordinate of a point along the ray, and a seam tolerance so a
    // hit on the cap/body boundary is accepted by at least one surface.
    let axial = |t: f64| (oa + d * t).dot(u);
    let seam = 1e-12 * (1.0 + len + oa.norm());

    let dp = d - u * d.dot(u);
    let op = oa - u * oa.dot(u);
    let qa = dp.norm_squared();
    if qa > 1e-15 {
        let qb = 2.0 * op.dot(dp);
        let qc = op.norm_squared() - r * r;
        for t in quadratic_roots(qa, qb, qc).into_iter().flatten() {
            let s = axial(t);
            if (-seam..=len + seam).contains(&s) {
                offer(t);
            }
        }
    }
    for t in sphere_roots(oa, d, r).into_iter().flatten() {
        if axial(t) <= seam {
            offer(t);
        }
    }
    for t in sphere_roots(o - capsule.b, d, r).into_iter().flatten() {
        if axial(t) >= len - seam {
            offer(t);
        }
    }
    best
}

/// Roots of `|rel + t·d|² = r²` for unit `d`.
fn sphere_roots(rel: Vec3, d: Vec3, r: f64) -> [Option<f64>; 2] {
    quadratic_roots(1.0, 2.0 * rel.dot(d), rel.norm_squared() - r * r)
}

/// Real roots of `a t² + b t + c`, `a > 0`, in the cancellation-free form.
fn quadratic_roots(a: f64, b: f64, c: f64) -> [Option<f64>; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return [None, None];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return [Some(0.0), None];
    }
    [Some(q / a), Some(c / q)]
}
