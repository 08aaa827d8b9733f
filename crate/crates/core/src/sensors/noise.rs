use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Per-sensor Gaussian noise source: SplitMix64 with Box–Muller draws.
///
/// Each normal draw consumes exactly two 64-bit outputs, so the stream
/// position depends only on the number of draws.
#[derive(Clone, Debug)]
pub struct NoiseRng {
    inner: SplitMix64,
}

impl NoiseRng {
    pub fn new(seed: u64) -> Self {
        NoiseRng {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    /// Seeded from `seed` combined with a hash of `sensor_id`.
    pub fn for_sensor(seed: u64, sensor_id: &str) -> Self {
        NoiseRng::new(sensor_seed(seed, sensor_id))
    }

    /// Uniform in (0, 1].
    fn open_unit(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.open_unit();
        let u2 = self.open_unit();
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(std::f64::consts::TAU * u2)
    }
}

/// `seed` XOR the 64-bit FNV-1a hash of `sensor_id`.
pub fn sensor_seed(seed: u64, sensor_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in sensor_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}

/// `value + stddev · N(0, 1)`. Always advances `rng`, even for zero stddev.
pub fn apply_noise(value: f64, stddev: f64, rng: &mut NoiseRng) -> f64 {
    let z = rng.standard_normal();
    if stddev == 0.0 {
        value
    } else {
        value + stddev * z
    }
}
