//! Counter-based deterministic random streams.
//!
//! Noise injection and per-instance geometry need randomness that is a pure
//! function of (seed, index), independent of evaluation order. splitmix64
//! gives a cheap stateless stream: `mix(seed, k)` is the k-th draw of the
//! stream without materializing the first k-1.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// One splitmix64 output for state `z`.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic value for slot `k` of the stream identified by `seed`.
#[inline]
pub fn mix(seed: u64, k: u64) -> u64 {
    splitmix64(seed ^ splitmix64(k.wrapping_mul(GOLDEN)))
}

/// Derive a child seed, e.g. one per scene or per instance.
#[inline]
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix(seed, index.wrapping_add(1))
}

/// Uniform f64 in [0, 1) from a u64.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller from two stream slots.
#[inline]
pub fn normal(seed: u64, k: u64) -> f64 {
    let u1 = unit_f64(mix(seed, k.wrapping_mul(2)));
    let u2 = unit_f64(mix(seed, k.wrapping_mul(2).wrapping_add(1)));
    // guard against ln(0)
    let u1 = u1.max(f64::MIN_POSITIVE);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_pure_functions() {
        assert_eq!(mix(7, 42), mix(7, 42));
        assert_ne!(mix(7, 42), mix(7, 43));
        assert_ne!(mix(7, 42), mix(8, 42));
    }

    #[test]
    fn unit_in_range() {
        for k in 0..1000 {
            let v = unit_f64(mix(123, k));
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn normal_moments() {
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for k in 0..n {
            let v = normal(99, k);
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
