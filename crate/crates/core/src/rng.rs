//! Portable noise generator.
//!
//! A 64-bit linear congruential generator with Knuth's MMIX constants:
//!
//! ```text
//! state' = state * 6364136223846793005 + 1442695040888963407   (mod 2^64)
//! output = state' >> 33                                        (31 bits)
//! ```
//!
//! The state is seeded as `seed ^ 0x5DEECE66D`. Bounded draws use
//! `output % span`; the slight modulo bias is part of the contract so traces
//! match across implementations.

pub const LCG_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
pub const LCG_INCREMENT: u64 = 1_442_695_040_888_963_407;
pub const LCG_SEED_XOR: u64 = 0x5_DEEC_E66D;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed ^ LCG_SEED_XOR,
        }
    }

    pub fn next_u32(&mut self) -> u32 {
        self.state = self
            .state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        (self.state >> 33) as u32
    }

    /// Uniform-ish integer in `lo..=hi`.
    pub fn range(&mut self, lo: i32, hi: i32) -> i32 {
        debug_assert!(lo <= hi);
        let span = (i64::from(hi) - i64::from(lo) + 1) as u64;
        lo + (u64::from(self.next_u32()) % span) as i32
    }

    pub fn below(&mut self, n: usize) -> usize {
        (u64::from(self.next_u32()) % n as u64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
