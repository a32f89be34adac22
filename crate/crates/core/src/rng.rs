//! Deterministic random sampling helpers over a seeded ChaCha20 stream.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Seeded deterministic RNG with the uniform/angle/disk draws the solvers
/// and samplers need. Identical seeds give identical streams on every
/// platform.
pub struct DetRng {
    inner: ChaCha20Rng,
}

impl DetRng {
    /// Creates a generator from a 64-bit seed.
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha20Rng::seed_from_u64(seed) }
    }

    /// Derives an independent stream for a named sub-purpose.
    pub fn fork(&mut self, tag: u64) -> Self {
        let base = self.inner.next_u64();
        Self::new(base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Rejection-free modulo; bias is negligible for the n used here
        // (n ≪ 2^32) but we keep the 64-bit reduction for determinism.
        (self.inner.next_u64() % n as u64) as usize
    }

    /// Uniform direction on the unit sphere in dimension n ∈ {2, 3}.
    pub fn unit_vector(&mut self, n: usize) -> [f64; 3] {
        match n {
            2 => {
                let phi = self.uniform_in(0.0, 2.0 * core::f64::consts::PI);
                [libm::cos(phi), libm::sin(phi), 0.0]
            }
            3 => {
                // Uniform z and azimuth.
                let z = self.uniform_in(-1.0, 1.0);
                let phi = self.uniform_in(0.0, 2.0 * core::f64::consts::PI);
                let r = libm::sqrt((1.0 - z * z).max(0.0));
                [r * libm::cos(phi), r * libm::sin(phi), z]
            }
            _ => panic!("unsupported dimension {n}"),
        }
    }
}
