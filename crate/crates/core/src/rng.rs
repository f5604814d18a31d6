//! Deterministic RNG plumbing.
//!
//! Every randomized operation in the crate takes an explicit `u64` seed and
//! builds its own ChaCha stream from it. Sub-streams (per zone, per UE, per
//! epoch) are derived with a SplitMix64 mix of `(seed, salt)` so that results
//! are independent of iteration order and thread scheduling.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Stable scrambling of a 64-bit word.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives an independent sub-seed from a base seed and a salt.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    splitmix64(splitmix64(base).wrapping_add(splitmix64(salt ^ 0xa5a5_a5a5_a5a5_a5a5)))
}

/// A seeded ChaCha stream.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A sub-stream for `(seed, salt)`, independent of other salts.
pub fn substream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, salt))
}

/// One circularly-symmetric complex standard normal draw: two independent
/// real normals scaled by `1/sqrt(2)` per component, so `E[|z|^2] = 1`.
pub fn complex_standard_normal(rng: &mut impl Rng) -> Complex64 {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(standard_normal(rng) * scale, standard_normal(rng) * scale)
}

/// One real standard normal draw (Box-Muller on two uniform draws).
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    // Draw u in (0, 1] to keep ln(u) finite.
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Fisher-Yates shuffle driven by the supplied stream.
pub fn shuffle<T>(items: &mut [T], rng: &mut impl Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_per_salt() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        let c = derive_seed(8, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn substreams_are_reproducible() {
        let mut r1 = substream(42, 3);
        let mut r2 = substream(42, 3);
        let x1: Vec<u64> = (0..8).map(|_| r1.gen()).collect();
        let x2: Vec<u64> = (0..8).map(|_| r2.gen()).collect();
        assert_eq!(x1, x2);
    }

    #[test]
    fn complex_normal_unit_variance() {
        let mut rng = stream(1);
        let n = 200_000;
        let mean_sq: f64 =
            (0..n).map(|_| complex_standard_normal(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean_sq - 1.0).abs() < 0.02, "E[|z|^2] = {mean_sq}");
    }
}
