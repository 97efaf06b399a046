//! Counter-based random bits: every draw is a pure function of a key and a
//! counter, so samples can be generated in any order on any thread.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ GOLDEN),
        }
    }

    /// Independent child generator, e.g. one per Monte-Carlo sample.
    pub fn derive(&self, word: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(word.wrapping_add(GOLDEN))),
        }
    }

    #[inline]
    pub fn bits(&self, counter: u64) -> u64 {
        mix64(mix64(counter.wrapping_mul(GOLDEN) ^ self.key) ^ counter)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.bits(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (`n > 0`), by widening multiply.
    #[inline]
    pub fn below(&self, counter: u64, n: u64) -> u64 {
        ((self.bits(counter) as u128 * n as u128) >> 64) as u64
    }
}
