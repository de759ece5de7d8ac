//! Deterministic random streams keyed on `(seed, tag, path, substream)`.
//!
//! Every path owns independent ChaCha8 streams addressed by stream id, so a
//! path's draws never depend on how paths are scheduled across workers.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Substream slots inside one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Substream {
    /// Variance driver `dW^v`.
    VarianceDriver = 0,
    /// Independent component `dW^perp` of the spot driver.
    Orthogonal = 1,
    /// Brownian-bridge uniforms.
    Bridge = 2,
}

const SUBSTREAMS: u64 = 3;

/// Root key for a family of path streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    key: [u8; 32],
}

impl StreamKey {
    /// Key derived from a master seed and a tag that separates experiments
    /// (ladder levels, sweeps) sharing that seed.
    pub fn new(seed: u64, tag: u64) -> Self {
        let mixed = seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(29);
        let mut expander = ChaCha8Rng::seed_from_u64(mixed);
        let mut key = [0u8; 32];
        expander.fill_bytes(&mut key);
        Self { key }
    }

    pub fn stream(&self, path: u64, sub: Substream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(path.wrapping_mul(SUBSTREAMS) + sub as u64);
        rng
    }

    pub fn path(&self, path: u64) -> PathStreams {
        PathStreams {
            dwv: self.stream(path, Substream::VarianceDriver),
            dwperp: self.stream(path, Substream::Orthogonal),
            bridge: self.stream(path, Substream::Bridge),
        }
    }
}

/// All streams of one path.
#[derive(Debug, Clone)]
pub struct PathStreams {
    pub dwv: ChaCha8Rng,
    pub dwperp: ChaCha8Rng,
    pub bridge: ChaCha8Rng,
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform draw on `(0, 1]`.
#[inline]
pub fn open_closed_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
