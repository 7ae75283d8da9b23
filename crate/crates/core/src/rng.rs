//! Portable seeded sampling.
//!
//! Every random choice in the pipeline goes through [`SplitRng`], so a split
//! can be recomputed by any implementation that follows these rules:
//!
//! * The generator is xoshiro256++ whose 256-bit state is filled by four
//!   successive outputs of splitmix64 started at the 64-bit seed.
//! * `below(n)` draws a uniform integer in `0..n` with Lemire's
//!   multiply-and-reject method on 64-bit outputs.
//! * `sample(n, k)` runs the first `k` steps of a forward Fisher-Yates
//!   shuffle over `0..n` (step `i` swaps position `i` with `i + below(n - i)`)
//!   and returns the first `k` positions.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 output function applied to `x + GOLDEN_GAMMA`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a stream index.
///
/// Child seeds for different indices are independent of how many indices are
/// later requested, so appending repetitions never perturbs earlier ones.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

#[derive(Debug, Clone)]
pub struct SplitRng {
    inner: Xoshiro256PlusPlus,
}

impl SplitRng {
    pub fn new(seed: u64) -> Self {
        SplitRng {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `k` distinct indices from `0..n` in selection order.
    pub fn sample(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        for i in 0..n.saturating_sub(1) {
            let j = i + self.below((n - i) as u64) as usize;
            items.swap(i, j);
        }
    }
}
