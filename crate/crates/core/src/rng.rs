//! Seeded, splittable random streams.
//!
//! Every random decision in the engine comes from a [`StreamRng`]: ChaCha8
//! (a counter-based stream cipher) keyed by the 64-bit seed and addressed by a
//! 64-bit stream id. The construction is fixed so other implementations can
//! reproduce scenes bit-for-bit:
//!
//! * key: the seed as 8 little-endian bytes followed by 24 zero bytes;
//! * stream: the ChaCha8 64-bit stream (nonce) word;
//! * `next_u64`: two consecutive 32-bit output words, low word first;
//! * `below(n)`: rejection sampling of `next_u64` against the largest multiple
//!   of `n` that fits in `u64`, then `value % n`.
//!
//! Stream ids used by the engine are listed in [`streams`].

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream ids reserved by the engine.
pub mod streams {
    /// Object attribute draws (shape, color, size, target slot).
    pub const ATTRIBUTES: u64 = 1;
    /// Position draws for object `i` use stream `POSITION_BASE + i`.
    pub const POSITION_BASE: u64 = 0x100;
    /// Random-policy action draws.
    pub const POLICY: u64 = 0x1_0000;
}

/// A ChaCha8 stream addressed by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream);
        Self { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform integer in the closed range `lo..=hi`.
    #[inline]
    pub fn range_inclusive(&mut self, lo: i32, hi: i32) -> i32 {
        debug_assert!(lo <= hi);
        let span = (hi as i64 - lo as i64 + 1) as u64;
        (lo as i64 + self.below(span) as i64) as i32
    }

    /// Uniformly chosen element of a non-empty slice.
    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }

    pub fn coin(&mut self) -> bool {
        self.below(2) == 1
    }
}
