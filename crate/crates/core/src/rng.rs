//! Counter-based random streams.
//!
//! A stream is identified by a 64-bit key; its `c`-th output is a pure
//! function of `(key, c)` (the SplitMix64 output function applied to
//! `key + c * GAMMA`). Keys for child streams are derived from a parent key and
//! an index, so the randomness attached to a lattice site, a BLP generation or
//! a replica never depends on the order in which the simulation touches them.

use rand_core::RngCore;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Default master seed used when a caller does not pick one.
pub const DEFAULT_SEED: u64 = 0x00C0_0C1E_5EED_2016;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of the `index`-th child stream of `parent`.
#[inline]
pub fn substream(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent ^ 0x6A09_E667_F3BC_C909).wrapping_add(mix64(index.wrapping_add(GAMMA))))
}

/// Same as [`substream`] for signed indices (lattice sites).
#[inline]
pub fn site_substream(parent: u64, site: i64) -> u64 {
    substream(parent, site as u64)
}

/// Random stream with explicit counter. Cloning a stream forks it: both copies
/// produce the same future outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    /// Stream positioned at an arbitrary counter.
    pub fn at(key: u64, counter: u64) -> Self {
        Self { key, counter }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline(always)]
    pub fn next_raw(&mut self) -> u64 {
        let out = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline(always)]
    pub fn uniform(&mut self) -> f64 {
        (self.next_raw() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform on `(0, 1)`; never returns 0.
    #[inline(always)]
    pub fn open_uniform(&mut self) -> f64 {
        ((self.next_raw() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform index in `0..n` (n > 0), multiply-shift reduction.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_raw() as u128 * n as u128) >> 64) as usize
    }

    /// Exponential(1) variate.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.open_uniform().ln()
    }

    /// Geometric number of failures before the first success, success
    /// probability `eps` in `(0, 1]`: `P(k) = (1 - eps)^k eps`.
    pub fn geometric_failures(&mut self, eps: f64) -> u64 {
        if eps >= 1.0 {
            return 0;
        }
        let u = self.open_uniform();
        (u.ln() / (1.0 - eps).ln()).floor() as u64
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_raw() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_raw()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_raw().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
