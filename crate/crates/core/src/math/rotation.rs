use std::fmt;
use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};

use super::{MathError, Vec3};

/// Tolerance on `|dot(q0, q1)|` above which slerp falls back to normalized lerp.
const SLERP_LINEAR_THRESHOLD: f64 = 1.0 - 1e-9;

/// Unit quaternion, Hamilton convention, scalar first.
///
/// The norm is restored to one on construction and after every product, so a
/// `UnitQuat` can always be used as a rotation without further checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuat {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Default for UnitQuat {
    fn default() -> Self {
        UnitQuat::IDENTITY
    }
}

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes `(w, x, y, z)`. Returns `None` for a zero or non-finite input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if n > 0.0 && n.is_finite() {
            Some(UnitQuat {
                w: w / n,
                x: x / n,
                y: y / n,
                z: z / n,
            })
        } else {
            None
        }
    }

    /// Renormalizes components already known to be close to unit length.
    #[inline]
    fn renormalized(w: f64, x: f64, y: f64, z: f64) -> Self {
        UnitQuat::new(w, x, y, z).unwrap_or(UnitQuat::IDENTITY)
    }

    /// Rotation of `angle` radians about `axis` (right-hand rule). A zero axis
    /// yields the identity.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let Some(axis) = axis.try_normalize() else {
            return UnitQuat::IDENTITY;
        };
        let half = 0.5 * angle;
        let s = libm::sin(half);
        UnitQuat::renormalized(libm::cos(half), axis.x * s, axis.y * s, axis.z * s)
    }

    /// Rotation whose axis is the direction of `v` and angle is `|v|` radians.
    pub fn from_rotation_vector(v: Vec3) -> Self {
        let angle = v.norm();
        if angle == 0.0 {
            UnitQuat::IDENTITY
        } else {
            UnitQuat::from_axis_angle(v / angle, angle)
        }
    }

    #[inline]
    pub fn w(&self) -> f64 {
        self.w
    }
    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.z
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    #[inline]
    pub fn vector_part(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    #[inline]
    pub fn dot(self, other: UnitQuat) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Inverse rotation (the conjugate, since the quaternion is unit).
    #[inline]
    pub fn inverse(self) -> UnitQuat {
        UnitQuat {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Rotates `v` by this quaternion: `q v q⁻¹`.
    #[inline]
    pub fn rotate(self, v: Vec3) -> Vec3 {
        let u = self.vector_part();
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(t)
    }

    /// Rotation vector (axis × angle, radians) on the shorter arc, angle in `[0, π]`.
    pub fn to_rotation_vector(self) -> Vec3 {
        let q = if self.w < 0.0 { -self } else { self };
        let sin_half = q.vector_part().norm();
        if sin_half == 0.0 {
            return Vec3::ZERO;
        }
        let angle = 2.0 * libm::atan2(sin_half, q.w);
        q.vector_part() * (angle / sin_half)
    }

    /// Angle in `[0, π]` of the relative rotation between `self` and `other`.
    pub fn angle_to(self, other: UnitQuat) -> f64 {
        let other = other.signed_like(self);
        let (diff, sum) = chord_norms(self, other);
        4.0 * libm::atan2(diff, sum)
    }

    /// Returns `self` or `-self`, whichever lies on the same hemisphere as `reference`.
    #[inline]
    fn signed_like(self, reference: UnitQuat) -> UnitQuat {
        if self.dot(reference) < 0.0 {
            -self
        } else {
            self
        }
    }

    /// True when `self` and `other` represent the same rotation within `tol`
    /// on every component, accounting for the double cover.
    pub fn approx_eq_rotation(self, other: UnitQuat, tol: f64) -> bool {
        let o = other.signed_like(self);
        (self.w - o.w).abs() <= tol
            && (self.x - o.x).abs() <= tol
            && (self.y - o.y).abs() <= tol
            && (self.z - o.z).abs() <= tol
    }
}

/// `(|a - b|, |a + b|)` treating both as plain 4-vectors.
fn chord_norms(a: UnitQuat, b: UnitQuat) -> (f64, f64) {
    let d = [a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z];
    let s = [a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z];
    let n = |v: [f64; 4]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    (n(d), n(s))
}

impl Mul for UnitQuat {
    type Output = UnitQuat;

    /// Hamilton product; `a * b` applies `b` first, then `a`.
    #[inline]
    fn mul(self, b: UnitQuat) -> UnitQuat {
        let a = self;
        UnitQuat::renormalized(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl Neg for UnitQuat {
    type Output = UnitQuat;
    #[inline]
    fn neg(self) -> UnitQuat {
        UnitQuat {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

impl TryFrom<[f64; 4]> for UnitQuat {
    type Error = MathError;

    fn try_from(a: [f64; 4]) -> Result<Self, MathError> {
        UnitQuat::new(a[0], a[1], a[2], a[3]).ok_or(MathError::DegenerateQuaternion)
    }
}

impl From<UnitQuat> for [f64; 4] {
    fn from(q: UnitQuat) -> Self {
        q.to_array()
    }
}

/// Spherical linear interpolation on the shorter arc.
///
/// `s` is clamped to `[0, 1]`; `s == 0` returns `q0` and `s == 1` returns `q1`
/// exactly. Nearly parallel inputs use normalized linear interpolation.
pub fn slerp(q0: UnitQuat, q1: UnitQuat, s: f64) -> UnitQuat {
    let s = if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) };
    if s == 0.0 {
        return q0;
    }
    if s == 1.0 {
        return q1;
    }
    let mut d = q0.dot(q1);
    let q1 = if d < 0.0 {
        d = -d;
        -q1
    } else {
        q1
    };
    if d > SLERP_LINEAR_THRESHOLD {
        return UnitQuat::renormalized(
            q0.w + s * (q1.w - q0.w),
            q0.x + s * (q1.x - q0.x),
            q0.y + s * (q1.y - q0.y),
            q0.z + s * (q1.z - q0.z),
        );
    }
    // Angle between the 4-vectors, computed without acos for accuracy.
    let (diff, sum) = chord_norms(q1, q0);
    let theta = 2.0 * libm::atan2(diff, sum);
    let sin_theta = libm::sin(theta);
    let a = libm::sin((1.0 - s) * theta) / sin_theta;
    let b = libm::sin(s * theta) / sin_theta;
    UnitQuat::renormalized(
        a * q0.w + b * q1.w,
        a * q0.x + b * q1.x,
        a * q0.y + b * q1.y,
        a * q0.z + b * q1.z,
    )
}

/// A coordinate axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::X,
            Axis::Y => Vec3::Y,
            Axis::Z => Vec3::Z,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// Single-axis rotation by `degrees`.
    pub fn rotation_deg(self, degrees: f64) -> UnitQuat {
        let half = 0.5 * degrees.to_radians();
        let (s, c) = (libm::sin(half), libm::cos(half));
        match self {
            Axis::X => UnitQuat::renormalized(c, s, 0.0, 0.0),
            Axis::Y => UnitQuat::renormalized(c, 0.0, s, 0.0),
            Axis::Z => UnitQuat::renormalized(c, 0.0, 0.0, s),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        })
    }
}

/// The order in which three Euler rotation channels are listed. Each axis
/// appears exactly once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RotationOrder([Axis; 3]);

impl RotationOrder {
    pub const XYZ: RotationOrder = RotationOrder([Axis::X, Axis::Y, Axis::Z]);
    pub const ZXY: RotationOrder = RotationOrder([Axis::Z, Axis::X, Axis::Y]);
    pub const ZYX: RotationOrder = RotationOrder([Axis::Z, Axis::Y, Axis::X]);

    pub fn new(axes: [Axis; 3]) -> Result<Self, MathError> {
        if axes[0] == axes[1] || axes[0] == axes[2] || axes[1] == axes[2] {
            return Err(MathError::DuplicateAxis(format!(
                "{}{}{}",
                axes[0], axes[1], axes[2]
            )));
        }
        Ok(RotationOrder(axes))
    }

    pub fn axes(&self) -> [Axis; 3] {
        self.0
    }
}

impl std::str::FromStr for RotationOrder {
    type Err = MathError;

    fn from_str(s: &str) -> Result<Self, MathError> {
        let axes: Vec<Axis> = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'X' => Ok(Axis::X),
                'Y' => Ok(Axis::Y),
                'Z' => Ok(Axis::Z),
                _ => Err(MathError::InvalidRotationOrder(s.to_string())),
            })
            .collect::<Result<_, _>>()?;
        let axes: [Axis; 3] = axes
            .try_into()
            .map_err(|_| MathError::InvalidRotationOrder(s.to_string()))?;
        RotationOrder::new(axes)
    }
}

/// Intrinsic Euler composition in listed order: for order `(A, B, C)` the
/// result is `R_A · R_B · R_C`, as BVH rotation channels are interpreted.
pub fn euler_to_quat(angles_deg: [f64; 3], order: RotationOrder) -> UnitQuat {
    let [a, b, c] = order.axes();
    a.rotation_deg(angles_deg[0]) * b.rotation_deg(angles_deg[1]) * c.rotation_deg(angles_deg[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn assert_vec_close(a: Vec3, b: Vec3, tol: f64) {
        assert!(a.distance(b) <= tol, "{a:?} vs {b:?}");
    }

    // Column-major 3x3 rotation matrices as an independent route for euler tests.
    fn rot_matrix(axis: Axis, deg: f64) -> [[f64; 3]; 3] {
        let (s, c) = deg.to_radians().sin_cos();
        match axis {
            Axis::X => [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
            Axis::Y => [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
            Axis::Z => [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    fn mat_mul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out
    }

    fn mat_apply(m: [[f64; 3]; 3], v: Vec3) -> Vec3 {
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    #[test]
    fn slerp_endpoints() {
        let q0 = UnitQuat::from_axis_angle(Vec3::new(1.0, 2.0, 3.0), 0.7);
        let q1 = UnitQuat::from_axis_angle(Vec3::new(-1.0, 0.5, 0.0), 2.1);
        assert_eq!(slerp(q0, q1, 0.0), q0);
        assert_eq!(slerp(q0, q1, 1.0), q1);
    }

    #[test]
    fn slerp_halfway_about_z() {
        let q1 = UnitQuat::from_axis_angle(Vec3::Z, FRAC_PI_2);
        let mid = slerp(UnitQuat::IDENTITY, q1, 0.5);
        let expected = UnitQuat::from_axis_angle(Vec3::Z, FRAC_PI_4);
        assert!(mid.approx_eq_rotation(expected, 1e-12));
    }

    #[test]
    fn slerp_double_cover() {
        let q = UnitQuat::from_axis_angle(Vec3::new(0.3, -1.0, 0.2), 1.3);
        let mid = slerp(q, -q, 0.5);
        assert!(mid.approx_eq_rotation(q, 1e-9));
    }

    #[test]
    fn slerp_takes_short_arc() {
        let q0 = UnitQuat::from_axis_angle(Vec3::Z, 0.1);
        let q1 = -UnitQuat::from_axis_angle(Vec3::Z, 0.3);
        let mid = slerp(q0, q1, 0.5);
        assert!(mid.approx_eq_rotation(UnitQuat::from_axis_angle(Vec3::Z, 0.2), 1e-12));
    }

    #[test]
    fn euler_identity() {
        for order in [RotationOrder::XYZ, RotationOrder::ZXY, RotationOrder::ZYX] {
            assert_eq!(euler_to_quat([0.0; 3], order), UnitQuat::IDENTITY);
        }
    }

    #[test]
    fn euler_z90_rotates_y_to_minus_x() {
        let q = euler_to_quat([90.0, 0.0, 0.0], RotationOrder::ZXY);
        assert_vec_close(q.rotate(Vec3::Y), Vec3::new(-1.0, 0.0, 0.0), 1e-9);
    }

    #[test]
    fn euler_matches_matrix_product() {
        let q = euler_to_quat([90.0, 90.0, 0.0], RotationOrder::ZXY);
        let m = mat_mul(rot_matrix(Axis::Z, 90.0), rot_matrix(Axis::X, 90.0));
        for basis in [Vec3::X, Vec3::Y, Vec3::Z] {
            assert_vec_close(q.rotate(basis), mat_apply(m, basis), 1e-9);
        }
        // Frozen from the matrix product: Rz(90)·Rx(90) maps X→Y, Y→Z, Z→X.
        assert_vec_close(q.rotate(Vec3::X), Vec3::Y, 1e-9);
        assert_vec_close(q.rotate(Vec3::Y), Vec3::Z, 1e-9);
        assert_vec_close(q.rotate(Vec3::Z), Vec3::X, 1e-9);
    }

    #[test]
    fn euler_arbitrary_orders_match_matrices() {
        let angles = [37.0, -112.5, 64.0];
        for order in ["XYZ", "XZY", "YXZ", "YZX", "ZXY", "ZYX"] {
            let order: RotationOrder = order.parse().unwrap();
            let [a, b, c] = order.axes();
            let m = mat_mul(
                mat_mul(rot_matrix(a, angles[0]), rot_matrix(b, angles[1])),
                rot_matrix(c, angles[2]),
            );
            let q = euler_to_quat(angles, order);
            for basis in [Vec3::X, Vec3::Y, Vec3::Z] {
                assert_vec_close(q.rotate(basis), mat_apply(m, basis), 1e-12);
            }
        }
    }

    #[test]
    fn rotation_order_rejects_duplicates() {
        assert!("XXY".parse::<RotationOrder>().is_err());
        assert!("XY".parse::<RotationOrder>().is_err());
        assert!("XYW".parse::<RotationOrder>().is_err());
    }

    #[test]
    fn rotation_vector_round_trip() {
        let v = Vec3::new(0.2, -0.4, 1.1);
        let q = UnitQuat::from_rotation_vector(v);
        assert_vec_close(q.to_rotation_vector(), v, 1e-12);
        assert_vec_close((-q).to_rotation_vector(), v, 1e-12);
    }

    #[test]
    fn angle_to_matches_construction() {
        let a = UnitQuat::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.4);
        let b = a * UnitQuat::from_axis_angle(Vec3::Y, 1.25);
        assert!((a.angle_to(b) - 1.25).abs() < 1e-12);
        assert!((a.angle_to(-b) - 1.25).abs() < 1e-12);
        let c = a * UnitQuat::from_axis_angle(Vec3::Y, PI);
        assert!((a.angle_to(c) - PI).abs() < 1e-9);
    }

    #[test]
    fn deserialize_normalizes() {
        let q: UnitQuat = serde_json::from_str("[2.0, 0.0, 0.0, 0.0]").unwrap();
        assert_eq!(q, UnitQuat::IDENTITY);
        assert!(serde_json::from_str::<UnitQuat>("[0.0, 0.0, 0.0, 0.0]").is_err());
    }

    fn arb_quat() -> impl proptest::strategy::Strategy<Value = UnitQuat> {
        use proptest::prelude::*;
        (prop::array::uniform3(-1.0f64..1.0), -3.1f64..3.1)
            .prop_map(|(axis, angle)| UnitQuat::from_axis_angle(Vec3::from(axis), angle))
    }

    proptest::proptest! {
        #[test]
        fn slerp_has_constant_angular_velocity(
            q0 in arb_quat(),
            q1 in arb_quat(),
            s in 0.0f64..0.9,
            delta in 0.001f64..0.1,
        ) {
            let total = q0.angle_to(q1);
            proptest::prop_assume!(total > 1e-3);
            let a = slerp(q0, q1, s);
            let b = slerp(q0, q1, s + delta);
            proptest::prop_assert!((a.angle_to(b) - delta * total).abs() <= 1e-6);
        }

        #[test]
        fn outputs_are_unit(q0 in arb_quat(), q1 in arb_quat(), s in 0.0f64..=1.0,
                            angles in proptest::array::uniform3(-720.0f64..720.0)) {
            proptest::prop_assert!((slerp(q0, q1, s).norm() - 1.0).abs() <= 1e-9);
            proptest::prop_assert!((euler_to_quat(angles, RotationOrder::ZXY).norm() - 1.0).abs() <= 1e-9);
            proptest::prop_assert!(((q0 * q1).norm() - 1.0).abs() <= 1e-9);
        }
    }
}
