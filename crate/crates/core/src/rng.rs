//! Seedable pseudorandom generator used everywhere randomness appears.
//!
//! A single explicit-state xorshift64* stream: the same seed always yields
//! the same sample sequence, on every platform. There is no global RNG.

use std::f64::consts::PI;

const SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

/// Explicit-state pseudorandom generator (xorshift64* core,
/// splitmix64 seed scrambling).
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    /// Creates a generator from a seed. Small consecutive seeds (0, 1, 2, …)
    /// are scrambled into well-separated states.
    pub fn new(seed: u64) -> Self {
        let mut s = seed.wrapping_add(SEED_MIX);
        s = (s ^ (s >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        s = (s ^ (s >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        s ^= s >> 31;
        Self {
            state: if s == 0 { SEED_MIX } else { s },
        }
    }

    /// Derives an independent stream from (seed, tag, index).
    ///
    /// Used to give each purpose (init, per-epoch noise, shuffling, …) its
    /// own reproducible stream without threading one generator everywhere.
    pub fn derive(seed: u64, tag: u64, index: u64) -> Self {
        Self::new(
            seed ^ tag.wrapping_mul(0xa076_1d64_78bd_642f)
                ^ index.wrapping_mul(0xe703_7ed1_a0b4_28db),
        )
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Uniform sample in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform sample in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// One standard-normal pair via Box–Muller.
    ///
    /// The first uniform is drawn from (0, 1] so the logarithm is finite.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// Fills `out` with i.i.d. N(0, 1) samples.
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        let mut i = 0;
        while i + 1 < out.len() {
            let (a, b) = self.normal_pair();
            out[i] = a;
            out[i + 1] = b;
            i += 2;
        }
        if i < out.len() {
            out[i] = self.normal_pair().0;
        }
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, data: &mut [T]) {
        for i in (1..data.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            data.swap(i, j);
        }
    }
}
