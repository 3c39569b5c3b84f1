//! Counter-addressed random streams.
//!
//! A stream is identified by `(seed, walker_id, lane)` and positioned by a
//! word counter. The generator is ChaCha8 keyed by the seed, with the ChaCha
//! stream id built from the walker id and lane, so every draw is a pure
//! function of `(seed, walker_id, lane, counter)` regardless of which thread
//! consumes it.
//!
//! Gaussian variates use the ziggurat sampler of `rand_distr::StandardNormal`
//! and exponential variates use `rand_distr::Exp1`; uniforms take the top 53
//! bits of one 64-bit word.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Independent sub-streams owned by one walker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Lane {
    /// Brownian increments.
    Path = 0,
    /// Randomized exit conditions.
    Exit = 1,
    /// Exit refinement (root finding).
    Refine = 2,
    /// Initial and restart positions.
    Init = 3,
}

const LANE_BITS: u32 = 2;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    walker_id: u64,
    lane: Lane,
    inner: ChaCha8Rng,
}

impl RngStream {
    /// Path lane of `walker_id`.
    pub fn new(seed: u64, walker_id: u64) -> Self {
        Self::with_lane(seed, walker_id, Lane::Path)
    }

    pub fn with_lane(seed: u64, walker_id: u64, lane: Lane) -> Self {
        assert!(
            walker_id < (1u64 << (64 - LANE_BITS)),
            "walker id {walker_id} out of range"
        );
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream((walker_id << LANE_BITS) | lane as u64);
        RngStream {
            seed,
            walker_id,
            lane,
            inner,
        }
    }

    /// Reconstructs a stream positioned at `counter`.
    pub fn at(seed: u64, walker_id: u64, lane: Lane, counter: u128) -> Self {
        let mut s = Self::with_lane(seed, walker_id, lane);
        s.inner.set_word_pos(counter);
        s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn walker_id(&self) -> u64 {
        self.walker_id
    }

    pub fn lane(&self) -> Lane {
        self.lane
    }

    /// Position in 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Another lane of the same walker, positioned at its start.
    pub fn sibling(&self, lane: Lane) -> Self {
        Self::with_lane(self.seed, self.walker_id, lane)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Exponential with unit rate.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.inner)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Derives a child seed from a parent seed and an index (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
