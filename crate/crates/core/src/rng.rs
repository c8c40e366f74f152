//! Deterministic random streams.
//!
//! Every stochastic component of the crate draws from an [`RngStream`], a
//! thin wrapper over the counter-based ChaCha generator. All derived draws
//! (uniforms, exponentials, normals) are implemented here from the raw 64-bit
//! output, so the exact sequence of variates consumed by a simulation is
//! pinned by this crate alone and identical seeds reproduce identical runs
//! bit for bit.
//!
//! # Canonical draw order
//!
//! The particle engines consume variates in a single documented order:
//!
//! 1. initial positions, pairs ascending, first-ensemble coordinates before
//!    second-ensemble coordinates, axes ascending;
//! 2. the initial rate build, slots ascending (pair-major, first member then
//!    second member, then any swap slot); per member slot an optional grid
//!    step draw (uniform-random grid policy only) followed by one
//!    exponential clock draw;
//! 3. per event: one uniform classifying the event type, then the draws the
//!    event itself needs (one uniform for a jump direction; donor index,
//!    role, and member uniforms for kill/clone events);
//! 4. post-event recomputation in the same slot order as step 2.
//!
//! Parallel replicas derive independent streams from the same seed via
//! ChaCha's stream counter, so a replica sweep is reproducible without
//! coordinating seeds.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Scale factor turning the top 53 bits of a `u64` into a double in [0,1).
const U53_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// A seedable, cloneable, deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha12Rng,
}

impl RngStream {
    /// Stream `0` for the given seed.
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha12Rng::seed_from_u64(seed) }
    }

    /// An independent stream for one replica of a seeded run.
    ///
    /// Replica `0` coincides with [`RngStream::new`].
    pub fn replica(seed: u64, replica_index: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(replica_index);
        Self { rng }
    }

    /// Raw 64-bit output.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw on `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * U53_SCALE
    }

    /// Uniform draw on the open interval `(0, 1)`.
    ///
    /// Offsetting the integer lattice by half a step keeps both endpoints
    /// unreachable, so `-ln(u)` is finite and strictly positive.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * U53_SCALE
    }

    /// Uniform draw on `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Exponential holding time with the given rate.
    ///
    /// Strictly positive for `rate > 0`; a non-positive rate returns `+∞`
    /// without consuming a draw (the event never fires).
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        if rate > 0.0 {
            -self.uniform_open().ln() / rate
        } else {
            f64::INFINITY
        }
    }

    /// Uniform index in `0..n`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let i = (self.uniform() * n as f64) as usize;
        i.min(n - 1)
    }

    /// Standard normal via Box–Muller (two uniforms per call, no caching, so
    /// the stream position stays predictable).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
