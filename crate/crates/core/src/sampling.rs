//! Seeded random sampling for verification routines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{CMat, CVec, C64};

pub type SampleRng = ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 20_051_006;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic per-sample stream derived from a base seed.
pub fn substream(seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// A derived seed for an independent verification stage.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn complex_normal(rng: &mut SampleRng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_vector(rng: &mut SampleRng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_normal(rng))
}

pub fn random_matrix(rng: &mut SampleRng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Random Hermitian matrix `(G + G†)/2` with Gaussian `G`.
pub fn random_hermitian(rng: &mut SampleRng, n: usize) -> CMat {
    let g = random_matrix(rng, n, n);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Random invertible matrix `I + G / (2 sqrt(n))`, comfortably conditioned.
pub fn random_well_conditioned(rng: &mut SampleRng, n: usize) -> CMat {
    let g = random_matrix(rng, n, n);
    CMat::identity(n, n) + g * C64::new(0.5 / (n as f64).sqrt(), 0.0)
}
