//! SplitMix64 streams.
//!
//! Every random draw in the crate comes from a [`SplitMix64`] stream. Streams
//! are cheap to construct, so sub-streams are derived from a key (seed plus a
//! few integers) rather than carved out of a shared generator. That keeps
//! sampling and permutation caches reproducible under any degree of
//! parallelism.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The SplitMix64 generator of Steele, Lea and Flood.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// A stream keyed by `seed` and an ordered list of integers.
    pub fn keyed(seed: u64, key: &[u64]) -> Self {
        let mut h = mix64(seed ^ GOLDEN_GAMMA);
        for &k in key {
            h = mix64(h.wrapping_add(GOLDEN_GAMMA) ^ mix64(k.wrapping_add(GOLDEN_GAMMA)));
        }
        Self::new(h)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform double in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` (Lemire's multiply-and-reject). Always
    /// consumes at least one draw, even when `n == 1`.
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

    /// Uniform integer in `[lo, hi)`.
    pub fn integers(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(hi > lo, "empty range [{lo}, {hi})");
        lo + self.below((hi - lo) as u64) as i64
    }

    /// Exponential variate with the given rate, by inverse CDF.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -(1.0 - self.next_f64()).ln() / rate
    }

    /// One element chosen uniformly from a set given in ascending order.
    pub fn choose<T: Copy>(&mut self, sorted: &[T]) -> T {
        sorted[self.below(sorted.len() as u64) as usize]
    }

    /// `k` distinct elements of `sorted`, drawn one at a time without
    /// replacement. The remaining pool stays in ascending order between draws.
    pub fn choose_distinct<T: Copy>(&mut self, sorted: &[T], k: usize) -> Vec<T> {
        let mut pool = sorted.to_vec();
        let mut out = Vec::with_capacity(k.min(pool.len()));
        for _ in 0..k.min(sorted.len()) {
            let i = self.below(pool.len() as u64) as usize;
            out.push(pool.remove(i));
        }
        out
    }

    /// Uniformly random permutation of `0..n` by Fisher-Yates.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            p.swap(i, j);
        }
        p
    }
}
