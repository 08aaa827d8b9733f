use super::{MathError, Vec3};

/// Uniform Catmull–Rom segment between `p0` (`s = 0`) and `p1` (`s = 1`).
///
/// Evaluated in Hermite form with tangents `(p1 - p_prev) / 2` at `p0` and
/// `(p2 - p0) / 2` at `p1`. The basis weights are exactly 0 or 1 at the
/// segment ends, so keyframes are reproduced bit-for-bit.
pub fn catmull_rom(p_prev: Vec3, p0: Vec3, p1: Vec3, p2: Vec3, s: f64) -> Vec3 {
    let m0 = (p1 - p_prev) * 0.5;
    let m1 = (p2 - p0) * 0.5;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11
}

/// Scalar form of [`catmull_rom`], used for individual animation channels.
pub fn catmull_rom_scalar(v_prev: f64, v0: f64, v1: f64, v2: f64, s: f64) -> f64 {
    let m0 = (v1 - v_prev) * 0.5;
    let m1 = (v2 - v0) * 0.5;
    let s2 = s * s;
    let s3 = s2 * s;
    v0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + m0 * (s3 - 2.0 * s2 + s)
        + v1 * (-2.0 * s3 + 3.0 * s2)
        + m1 * (s3 - s2)
}

/// `(p_prev - 2 p + p_next) / h²`.
pub fn central_second_difference(
    p_prev: Vec3,
    p: Vec3,
    p_next: Vec3,
    h: f64,
) -> Result<Vec3, MathError> {
    if !h.is_finite() || h <= 0.0 {
        return Err(MathError::InvalidStep(h));
    }
    Ok((p_prev - p * 2.0 + p_next) / (h * h))
}
