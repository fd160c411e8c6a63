//! Brownian increments keyed by `(seed, purpose, replica)`.
//!
//! Each replica reads its own ChaCha stream: the seed and purpose select the
//! key and the replica index selects the stream id, so the increment at step
//! `k` of replica `r` does not depend on how replicas are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{LabError, Result};

/// Stream purposes; distinct purposes never share a key.
pub mod purpose {
    pub const LANGEVIN: u64 = 0x4c41_4e47;
    pub const OVERDAMPED: u64 = 0x4f56_4452;
    pub const INITIAL: u64 = 0x494e_4954;
    pub const VELOCITY: u64 = 0x5645_4c4f;
    pub const BOOTSTRAP: u64 = 0x424f_4f54;
    pub const PILOT: u64 = 0x5049_4c54;
    pub const INSTANCE: u64 = 0x494e_5354;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, purpose, replica)`.
pub fn stream_rng(seed: u64, purpose: u64, replica: u64) -> ChaCha8Rng {
    let mut state = seed ^ purpose.rotate_left(32);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replica);
    rng
}

/// Derives a child seed, e.g. one per γ value of a sweep.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut s = seed ^ tag.wrapping_mul(0xd6e8_feb8_6659_fd93);
    splitmix64(&mut s)
}

/// Source of `d`-dimensional Brownian increments `ΔB ~ N(0, h I)`.
pub trait NoiseSource {
    fn dim(&self) -> usize;
    fn step(&self) -> f64;
    fn next_increment(&mut self, out: &mut [f64]) -> Result<()>;
}

/// Unbounded on-the-fly increment stream.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    dim: usize,
    h: f64,
    sqrt_h: f64,
}

impl NoiseStream {
    pub fn new(seed: u64, purpose: u64, replica: u64, dim: usize, h: f64) -> Self {
        NoiseStream { rng: stream_rng(seed, purpose, replica), dim, h, sqrt_h: h.sqrt() }
    }
}

impl NoiseSource for NoiseStream {
    fn dim(&self) -> usize {
        self.dim
    }
    fn step(&self) -> f64 {
        self.h
    }
    #[inline]
    fn next_increment(&mut self, out: &mut [f64]) -> Result<()> {
        for o in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *o = self.sqrt_h * z;
        }
        Ok(())
    }
}

/// Materialized increments, for callers that need to replay or bin a path.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    seed: u64,
    replica: u64,
    dim: usize,
    h: f64,
    increments: Vec<f64>,
}

impl NoisePath {
    pub fn generate(seed: u64, replica: u64, dim: usize, h: f64, steps: usize) -> Self {
        let mut stream = NoiseStream::new(seed, purpose::LANGEVIN, replica, dim, h);
        let mut increments = vec![0.0; steps * dim];
        for chunk in increments.chunks_mut(dim) {
            stream.next_increment(chunk).expect("streams do not run out");
        }
        NoisePath { seed, replica, dim, h, increments }
    }

    /// Wraps explicit increments (each of variance `h`).
    pub fn from_increments(dim: usize, h: f64, increments: Vec<f64>) -> Result<Self> {
        if dim == 0 || !increments.len().is_multiple_of(dim) {
            return Err(LabError::invalid("increment buffer is not a multiple of the dimension"));
        }
        if !(h > 0.0) {
            return Err(LabError::invalid("step must be positive"));
        }
        Ok(NoisePath { seed: 0, replica: 0, dim, h, increments })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn replica(&self) -> u64 {
        self.replica
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn step(&self) -> f64 {
        self.h
    }
    pub fn len(&self) -> usize {
        self.increments.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dim..(k + 1) * self.dim]
    }

    /// Sums over consecutive bins of `bin_steps` increments, summed in order.
    pub fn bin_sums(&self, bin_steps: usize) -> Result<Vec<f64>> {
        if bin_steps == 0 || !self.len().is_multiple_of(bin_steps) {
            return Err(LabError::Misaligned(format!(
                "{} increments do not split into bins of {}",
                self.len(),
                bin_steps
            )));
        }
        let mut acc = BinAccumulator::new(self.dim, bin_steps);
        for k in 0..self.len() {
            acc.push(self.increment(k));
        }
        Ok(acc.into_sums())
    }

    pub fn reader(&self) -> NoisePathReader<'_> {
        NoisePathReader { path: self, cursor: 0 }
    }
}

pub struct NoisePathReader<'a> {
    path: &'a NoisePath,
    cursor: usize,
}

impl NoiseSource for NoisePathReader<'_> {
    fn dim(&self) -> usize {
        self.path.dim
    }
    fn step(&self) -> f64 {
        self.path.h
    }
    fn next_increment(&mut self, out: &mut [f64]) -> Result<()> {
        if self.cursor >= self.path.len() {
            return Err(LabError::NoiseExhausted { available: self.path.len() });
        }
        out.copy_from_slice(self.path.increment(self.cursor));
        self.cursor += 1;
        Ok(())
    }
}

/// Running sums of increments over bins of fixed length.
#[derive(Debug, Clone)]
pub struct BinAccumulator {
    dim: usize,
    bin_steps: usize,
    filled: usize,
    sums: Vec<f64>,
}

impl BinAccumulator {
    pub fn new(dim: usize, bin_steps: usize) -> Self {
        BinAccumulator { dim, bin_steps, filled: 0, sums: Vec::new() }
    }

    pub fn with_capacity(dim: usize, bin_steps: usize, bins: usize) -> Self {
        BinAccumulator { dim, bin_steps, filled: 0, sums: Vec::with_capacity(bins * dim) }
    }

    #[inline]
    pub fn push(&mut self, increment: &[f64]) {
        if self.filled == 0 {
            self.sums.extend(std::iter::repeat_n(0.0, self.dim));
        }
        let start = self.sums.len() - self.dim;
        for (s, v) in self.sums[start..].iter_mut().zip(increment) {
            *s += v;
        }
        self.filled += 1;
        if self.filled == self.bin_steps {
            self.filled = 0;
        }
    }

    /// True when every opened bin is complete.
    pub fn is_aligned(&self) -> bool {
        self.filled == 0
    }

    pub fn bins(&self) -> usize {
        self.sums.len() / self.dim
    }

    pub fn into_sums(self) -> Vec<f64> {
        self.sums
    }
}
