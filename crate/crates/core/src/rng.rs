//! Seeded randomness.
//!
//! Every stochastic routine draws from [`ChaCha8Rng`] seeded through
//! `seed_from_u64`, which is specified independently of platform and word
//! size. Sub-streams (one per Monte Carlo trial, one for noise, ...) are
//! derived with a SplitMix64 finalizer so that trial `i` sees the same
//! numbers whether trials run serially or in parallel.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sub-stream `index` of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn gaussian_vector(len: usize, rng: &mut Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| StandardNormal.sample(rng))
}

/// Uniformly distributed direction on the unit sphere in `len` dimensions,
/// scaled to `norm`. A zero `norm` gives the zero vector without consuming
/// randomness.
pub fn sphere_vector(len: usize, norm: f64, rng: &mut Rng) -> DVector<f64> {
    if norm == 0.0 || len == 0 {
        return DVector::zeros(len);
    }
    loop {
        let g = gaussian_vector(len, rng);
        let n = g.norm();
        if n > 0.0 {
            return g * (norm / n);
        }
    }
}
