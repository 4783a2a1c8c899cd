//! Deterministic, platform-portable randomness.
//!
//! All sampling reduces to integer draws from ChaCha8 streams so that a fixed
//! seed produces byte-identical output on every platform and at every
//! parallelism degree. Units of work (subsets, bootstrap replicates, days,
//! countries) each get an independent substream derived from the root seed
//! with SplitMix64, so parallel generation is order-independent.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Substream tags, one per independent consumer of randomness.
pub mod tag {
    pub const SUBSET: u64 = 0x5155_414e_5355_4253; // ensemble word subsets
    pub const BOOTSTRAP: u64 = 0x424f_4f54_5354_5250;
    pub const TRAIN: u64 = 0x5452_4149_4e43_4f52;
    pub const TEST: u64 = 0x5445_5354_434f_5250;
    pub const DAY: u64 = 0x4441_5953_5452_4d30;
    pub const COUNTRY: u64 = 0x434f_554e_5452_5930;
    pub const NOISE: u64 = 0x4e4f_4953_4553_5444;
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent generator for one unit of work under one tag.
pub fn substream(seed: u64, tag: u64, unit: u64) -> ChaCha8Rng {
    let derived = splitmix64(splitmix64(seed ^ tag).wrapping_add(unit));
    ChaCha8Rng::seed_from_u64(derived)
}

/// Unbiased integer in `[0, n)` by rejection.
pub fn gen_index(rng: &mut impl RngCore, n: usize) -> usize {
    debug_assert!(n > 0);
    let n64 = n as u64;
    let limit = (u64::MAX / n64) * n64;
    loop {
        let r = rng.next_u64();
        if r < limit {
            return (r % n64) as usize;
        }
    }
}

/// Uniform in `[0, 1)` with 53 bits of precision.
pub fn gen_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller on 53-bit uniforms.
pub fn gen_normal(rng: &mut impl RngCore) -> f64 {
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / ((1u64 << 53) + 1) as f64);
    let u2 = gen_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `k` distinct indices from `[0, n)` via partial Fisher-Yates, sorted.
pub fn sample_without_replacement(rng: &mut impl RngCore, n: usize, k: usize) -> Vec<u32> {
    assert!(k <= n, "cannot draw {k} distinct values from {n}");
    let mut pool: Vec<u32> = (0..n as u32).collect();
    for i in 0..k {
        let j = i + gen_index(rng, n - i);
        pool.swap(i, j);
    }
    let mut out = pool[..k].to_vec();
    out.sort_unstable();
    out
}

/// Categorical sampler with fixed-point (2^53) cumulative thresholds,
/// so draws are pure integer comparisons.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    cum: Vec<u64>,
}

impl CategoricalSampler {
    /// `probs` must be nonnegative with a positive sum; it is normalized here.
    pub fn new(probs: &[f64]) -> CategoricalSampler {
        assert!(!probs.is_empty());
        let total: f64 = probs.iter().sum();
        assert!(total > 0.0, "categorical weights must have positive sum");
        const SCALE: f64 = (1u64 << 53) as f64;
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in probs {
            assert!(*p >= 0.0);
            acc += p / total;
            cum.push((acc * SCALE).round().min(SCALE) as u64);
        }
        *cum.last_mut().unwrap() = 1u64 << 53;
        CategoricalSampler { cum }
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> usize {
        let r = rng.next_u64() >> 11;
        self.cum.partition_point(|&c| c <= r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_independent_of_order() {
        let mut a1 = substream(7, tag::DAY, 3);
        let mut b1 = substream(7, tag::DAY, 4);
        let x = (a1.next_u64(), b1.next_u64());
        let mut b2 = substream(7, tag::DAY, 4);
        let mut a2 = substream(7, tag::DAY, 3);
        let y = (a2.next_u64(), b2.next_u64());
        assert_eq!(x, y);
    }

    #[test]
    fn gen_index_stays_in_range() {
        let mut rng = substream(1, tag::SUBSET, 0);
        for _ in 0..1000 {
            assert!(gen_index(&mut rng, 7) < 7);
        }
    }

    #[test]
    fn sampler_hits_every_positive_class() {
        let s = CategoricalSampler::new(&[0.2, 0.5, 0.3]);
        let mut rng = substream(2, tag::TEST, 0);
        let mut seen = [0usize; 3];
        for _ in 0..10_000 {
            seen[s.sample(&mut rng)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 0));
        // rough frequency check
        assert!((seen[1] as f64 / 10_000.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn zero_probability_class_never_sampled() {
        let s = CategoricalSampler::new(&[0.5, 0.0, 0.5]);
        let mut rng = substream(3, tag::TEST, 0);
        for _ in 0..5_000 {
            assert_ne!(s.sample(&mut rng), 1);
        }
    }

    #[test]
    fn sample_without_replacement_distinct_sorted() {
        let mut rng = substream(4, tag::SUBSET, 9);
        let s = sample_without_replacement(&mut rng, 100, 12);
        assert_eq!(s.len(), 12);
        for w in s.windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
