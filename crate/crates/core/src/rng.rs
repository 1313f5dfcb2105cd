//! Deterministic randomness for problem generation and mask sampling.
//!
//! Everything random in this crate flows through one seedable generator
//! (ChaCha8) split into fixed substreams, so a 64-bit seed reproduces a
//! problem bit-exactly on any platform:
//!
//! ```text
//! stream 0  core tensor entries
//! stream 1  factor matrices, mode order, column-major within each factor
//! stream 2  noise tensor entries
//! stream 3  observation mask offsets
//! ```
//!
//! The derived draws are pinned here rather than delegated to a
//! distributions library, so golden files depend only on this module and
//! the ChaCha stream itself: standard normals via the Box-Muller transform
//! (pairs cached), bounded integers via Lemire's multiply-shift rejection,
//! and without-replacement offset sampling via a partial Fisher-Yates
//! shuffle.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_CORE: u64 = 0;
pub(crate) const STREAM_FACTORS: u64 = 1;
pub(crate) const STREAM_NOISE: u64 = 2;
pub(crate) const STREAM_MASK: u64 = 3;

const INV_2_53: f64 = 1.0 / 9007199254740992.0;

/// Generator for one named substream of a seed.
pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard-normal source: Box-Muller on 53-bit uniforms, one spare cached.
pub(crate) struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub(crate) fn new(rng: ChaCha8Rng) -> Self {
        GaussianSource { rng, spare: None }
    }

    pub(crate) fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 lands in (0, 1] so the logarithm is finite; u2 in [0, 1).
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * INV_2_53;
        let u2 = (self.rng.next_u64() >> 11) as f64 * INV_2_53;
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub(crate) fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next();
        }
    }
}

/// Unbiased uniform draw from `[0, bound)` via Lemire's method.
pub(crate) fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    let mut m = rng.next_u64() as u128 * bound as u128;
    if (m as u64) < bound {
        let threshold = bound.wrapping_neg() % bound;
        while (m as u64) < threshold {
            m = rng.next_u64() as u128 * bound as u128;
        }
    }
    (m >> 64) as u64
}

/// Draws `count` distinct offsets from `[0, len)` uniformly without
/// replacement (partial Fisher-Yates over the offset pool), returned
/// sorted ascending.
pub(crate) fn sample_offsets(rng: &mut ChaCha8Rng, len: usize, count: usize) -> Vec<usize> {
    assert!(count >= 1 && count <= len, "need 1 <= count <= len, got {count} of {len}");
    let mut pool: Vec<usize> = (0..len).collect();
    for i in 0..count {
        let j = i + uniform_below(rng, (len - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool.sort_unstable();
    pool
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_deterministic_and_distinct() {
        let a: Vec<u64> = {
            let mut r = substream(42, STREAM_CORE);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = substream(42, STREAM_CORE);
            (0..8).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let c: Vec<u64> = {
            let mut r = substream(42, STREAM_MASK);
            (0..8).map(|_| r.next_u64()).collect()
        };
        assert_ne!(a, c);
        let d: Vec<u64> = {
            let mut r = substream(43, STREAM_CORE);
            (0..8).map(|_| r.next_u64()).collect()
        };
        assert_ne!(a, d);
    }

    #[test]
    fn gaussian_moments_are_plausible() {
        let mut g = GaussianSource::new(substream(7, STREAM_NOISE));
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z = g.next();
            assert!(z.is_finite());
            assert!(z.abs() < 10.0);
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn uniform_below_stays_in_range_and_hits_every_value() {
        let mut rng = substream(11, STREAM_MASK);
        for _ in 0..100 {
            assert_eq!(uniform_below(&mut rng, 1), 0);
        }
        let mut counts = [0usize; 7];
        for _ in 0..14_000 {
            counts[uniform_below(&mut rng, 7) as usize] += 1;
        }
        for (v, &c) in counts.iter().enumerate() {
            assert!(c > 1700 && c < 2300, "value {v} drawn {c} times");
        }
    }

    #[test]
    fn sample_offsets_is_a_sorted_distinct_subset() {
        let mut rng = substream(3, STREAM_MASK);
        let picked = sample_offsets(&mut rng, 1000, 137);
        assert_eq!(picked.len(), 137);
        assert!(picked.windows(2).all(|w| w[0] < w[1]));
        assert!(picked.iter().all(|&o| o < 1000));
    }

    #[test]
    fn sample_offsets_full_draw_is_identity_set() {
        let mut rng = substream(5, STREAM_MASK);
        let picked = sample_offsets(&mut rng, 64, 64);
        assert_eq!(picked, (0..64).collect::<Vec<_>>());
    }

    #[test]
    fn sample_offsets_single_draw() {
        let mut rng = substream(9, STREAM_MASK);
        let picked = sample_offsets(&mut rng, 10, 1);
        assert_eq!(picked.len(), 1);
        assert!(picked[0] < 10);
    }
}
